#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "invsde/synthesis.hpp"

#include <json.hpp>

namespace invsde {

/// JSON system-definition file. Exactly one of the two forms must be
/// present: a first integral `M` with coefficient table `u` (synthesized
/// system), or explicit `drift` and `diffusion` expression arrays
/// (hand-entered system, optionally with `M` for verification).
struct system_definition {
    int n = 0;
    int s = 0;
    std::optional<std::string> M;
    std::map<std::pair<int, int>, std::string> u; // (j,l) -> expression text
    std::string basis = "auto";
    std::optional<std::string> interpretation_name;
    std::vector<std::string> drift;
    std::vector<std::vector<std::string>> diffusion; // s columns of n entries
    std::vector<std::vector<double>> x0;
    double t0 = 0.0;
    double T = 1.0;

    bool synthesized() const { return M.has_value() && !u.empty(); }
    bool hand_entered() const { return !drift.empty() || !diffusion.empty(); }

    void validate() const {
        if (n < 2) throw config_error("definition needs n >= 2");
        if (synthesized() == hand_entered())
            throw config_error("definition must contain exactly one of {M+u} or "
                               "{drift+diffusion}");
        if (synthesized()) {
            if (s < 0) throw config_error("definition needs s >= 0");
            for (const auto& [key, text] : u) {
                auto [j, l] = key;
                if (j < 1 || j > n - 1)
                    throw config_error("coefficient key \"" + std::to_string(j) + "," +
                                       std::to_string(l) + "\": j must be in 1..n-1");
                if (l < 0 || l > s)
                    throw config_error("coefficient key \"" + std::to_string(j) + "," +
                                       std::to_string(l) + "\": l must be in 0..s");
                (void)text;
            }
        } else {
            if (!interpretation_name)
                throw config_error("hand-entered definition must declare "
                                   "\"interpretation\"");
            if (static_cast<int>(drift.size()) != n)
                throw config_error("drift must have n entries");
            if (diffusion.empty()) throw config_error("diffusion must have at least 1 column");
            for (const auto& col : diffusion)
                if (static_cast<int>(col.size()) != n)
                    throw config_error("every diffusion column must have n entries");
            if (s != 0 && s != static_cast<int>(diffusion.size()))
                throw config_error("s does not match the number of diffusion columns");
        }
        for (const auto& point : x0)
            if (static_cast<int>(point.size()) != n)
                throw config_error("every x0 entry must have n components");
    }
};

inline interpretation interpretation_from_string(const std::string& name) {
    if (name == "ito") return interpretation::ito;
    if (name == "stratonovich") return interpretation::stratonovich;
    throw config_error("unknown interpretation \"" + name +
                       "\" (expected \"ito\" or \"stratonovich\")");
}

inline system_definition definition_from_json(const nlohmann::json& j) {
    system_definition def;
    try {
        def.n = j.at("n").get<int>();
        if (j.contains("s")) def.s = j.at("s").get<int>();
        if (j.contains("M")) def.M = j.at("M").get<std::string>();
        if (j.contains("u")) {
            for (const auto& [key, value] : j.at("u").items()) {
                auto comma = key.find(',');
                if (comma == std::string::npos)
                    throw config_error("coefficient key \"" + key + "\" must look like \"j,l\"");
                int jj = std::stoi(key.substr(0, comma));
                int ll = std::stoi(key.substr(comma + 1));
                def.u[{jj, ll}] = value.get<std::string>();
            }
        }
        if (j.contains("basis")) def.basis = j.at("basis").get<std::string>();
        if (j.contains("interpretation"))
            def.interpretation_name = j.at("interpretation").get<std::string>();
        if (j.contains("drift")) def.drift = j.at("drift").get<std::vector<std::string>>();
        if (j.contains("diffusion"))
            def.diffusion = j.at("diffusion").get<std::vector<std::vector<std::string>>>();
        if (j.contains("x0")) {
            const auto& x0 = j.at("x0");
            if (!x0.empty() && x0[0].is_array())
                def.x0 = x0.get<std::vector<std::vector<double>>>();
            else
                def.x0 = {x0.get<std::vector<double>>()};
        }
        if (j.contains("t0")) def.t0 = j.at("t0").get<double>();
        if (j.contains("T")) def.T = j.at("T").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("bad definition file: ") + e.what());
    }
    def.validate();
    return def;
}

inline system_definition load_definition(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error(std::string("definition is not valid JSON: ") + e.what());
    }
    return definition_from_json(j);
}

inline nlohmann::json definition_to_json(const system_definition& def) {
    nlohmann::json j;
    j["n"] = def.n;
    j["s"] = def.s;
    if (def.M) j["M"] = *def.M;
    if (!def.u.empty()) {
        nlohmann::json u = nlohmann::json::object();
        for (const auto& [key, text] : def.u)
            u[std::to_string(key.first) + "," + std::to_string(key.second)] = text;
        j["u"] = u;
    }
    if (def.basis != "auto") j["basis"] = def.basis;
    if (def.interpretation_name) j["interpretation"] = *def.interpretation_name;
    if (!def.drift.empty()) j["drift"] = def.drift;
    if (!def.diffusion.empty()) j["diffusion"] = def.diffusion;
    if (!def.x0.empty()) {
        if (def.x0.size() == 1)
            j["x0"] = def.x0[0];
        else
            j["x0"] = def.x0;
    }
    j["t0"] = def.t0;
    j["T"] = def.T;
    return j;
}

/// Build the runtime system a definition describes.
inline sde_system build_system(const system_definition& def) {
    def.validate();
    if (def.synthesized()) {
        invariant_spec spec = invariant_spec::make(def.n, parse(*def.M), def.basis);
        coefficient_choice choice(def.n, def.s);
        for (const auto& [key, text] : def.u) choice.set(key.first, key.second, parse(text));
        interpretation interp = def.interpretation_name
                                    ? interpretation_from_string(*def.interpretation_name)
                                    : interpretation::stratonovich;
        return synthesize_system(std::move(spec), std::move(choice), interp);
    }
    std::vector<expr> drift;
    for (const auto& text : def.drift) drift.push_back(parse(text));
    std::vector<std::vector<expr>> diffusion;
    for (const auto& col : def.diffusion) {
        std::vector<expr> column;
        for (const auto& text : col) column.push_back(parse(text));
        diffusion.push_back(std::move(column));
    }
    std::optional<expr> invariant;
    if (def.M) invariant = parse(*def.M);
    return make_explicit_system(def.n, interpretation_from_string(*def.interpretation_name),
                                std::move(drift), std::move(diffusion), std::move(invariant));
}

} // namespace invsde
