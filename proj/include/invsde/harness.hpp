#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "invsde/simulate.hpp"
#include "invsde/synthesis.hpp"

#include <json.hpp>

namespace invsde {

/// Monte-Carlo invariant drift estimate for one step size:
/// epsilon = (1/R) sum_r |M(t0, x0) - M(T, Y_N^(r))|.
struct error_report {
    double h = 0.0;
    int trajectories = 0; // R
    double epsilon = 0.0;
    double sample_std = 0.0; // standard deviation of the summand
    double std_error = 0.0;  // sample_std / sqrt(R)
    int aborts = 0;
    // embedded configuration
    std::uint64_t seed = 0;
    std::string integrator;
    std::string system_name;
    double t0 = 0.0;
    double T = 0.0;
    std::vector<double> x0;

    friend bool operator==(const error_report& a, const error_report& b) {
        return a.h == b.h && a.trajectories == b.trajectories && a.epsilon == b.epsilon &&
               a.sample_std == b.sample_std && a.std_error == b.std_error &&
               a.aborts == b.aborts && a.seed == b.seed && a.integrator == b.integrator &&
               a.system_name == b.system_name && a.t0 == b.t0 && a.T == b.T && a.x0 == b.x0;
    }
};

/// Error reports over a decreasing step ladder plus the estimated order
/// between adjacent rungs: p = log(eps_i/eps_{i+1}) / log(h_i/h_{i+1}).
struct convergence_table {
    std::vector<error_report> rows;
    std::vector<double> orders;
};

namespace detail {

/// Interpretation handling for measurement runs: synthesized systems
/// convert on provenance as usual; hand-entered systems convert when the
/// declared invariant pins their meaning, and are rejected otherwise.
inline sde_system resolve_for_harness(const sde_system& system, integrator_kind method) {
    if (method == integrator_kind::analytic_sphere || method == integrator_kind::euler) {
        if (method == integrator_kind::euler && system.interp != interpretation::ito &&
            !system.provenance && !system.invariant)
            throw config_error("cannot convert a hand-entered system without a declared "
                               "first integral; state it in Ito form");
        if (method == integrator_kind::euler && system.interp != interpretation::ito)
            return convert_interpretation(system, interpretation::ito);
        return system;
    }
    if (system.interp == interpretation::stratonovich) return system;
    if (!system.provenance && !system.invariant)
        throw config_error("cannot convert a hand-entered system without a declared "
                           "first integral; state it in Stratonovich form");
    return convert_interpretation(system, interpretation::stratonovich);
}

inline unsigned worker_count(int requested, int jobs) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    unsigned cap = requested > 0 ? static_cast<unsigned>(requested) : hw;
    return std::min<unsigned>(cap, static_cast<unsigned>(jobs));
}

} // namespace detail

/// Estimate the invariant drift at step size h from R trajectories using
/// substreams 0..R-1 of `seed`. Trajectories may run on a worker pool; the
/// reduction is in trajectory order, so the estimate is bit-reproducible
/// for a fixed seed regardless of thread count. Throws if more than 1% of
/// trajectories abort.
inline error_report invariant_error(const sde_system& system, integrator_kind method,
                                    std::span<const double> x0, double t0, double T, double h,
                                    int trajectories, std::uint64_t seed, int threads = 0,
                                    const std::string& system_name = "") {
    if (trajectories < 1) throw config_error("trajectory count must be at least 1");
    if (!system.invariant)
        throw config_error("invariant drift estimation needs a first integral");
    sde_system sys = detail::resolve_for_harness(system, method);
    const expr& M = *sys.invariant;
    const double m0 = M.evaluate<double>(t0, x0);

    std::vector<double> deviation(trajectories, 0.0);
    std::vector<std::uint8_t> aborted(trajectories, 0);
    std::atomic<int> next{0};
    auto run = [&] {
        sim_config config;
        config.t0 = t0;
        config.T = T;
        config.h = h;
        config.x0.assign(x0.begin(), x0.end());
        config.method = method;
        config.seed = seed;
        for (;;) {
            int r = next.fetch_add(1);
            if (r >= trajectories) break;
            config.trajectory_index = static_cast<std::uint64_t>(r);
            try {
                trajectory tr = simulate_trajectory(sys, config);
                deviation[r] = std::abs(m0 - tr.invariant_values.back());
            } catch (const trajectory_abort&) {
                aborted[r] = 1;
            }
        }
    };
    unsigned workers = detail::worker_count(threads, trajectories);
    if (workers <= 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
        for (auto& th : pool) th.join();
    }

    error_report report;
    report.h = h;
    report.trajectories = trajectories;
    report.seed = seed;
    report.integrator = to_string(method);
    report.system_name = system_name;
    report.t0 = t0;
    report.T = T;
    report.x0.assign(x0.begin(), x0.end());
    int ok = 0;
    double sum = 0.0;
    for (int r = 0; r < trajectories; ++r) {
        if (aborted[r]) {
            ++report.aborts;
            continue;
        }
        sum += deviation[r];
        ++ok;
    }
    if (report.aborts * 100 > trajectories)
        throw error("more than 1% of trajectories aborted (" + std::to_string(report.aborts) +
                    " of " + std::to_string(trajectories) + ")");
    report.epsilon = sum / ok;
    double var = 0.0;
    for (int r = 0; r < trajectories; ++r) {
        if (aborted[r]) continue;
        double d = deviation[r] - report.epsilon;
        var += d * d;
    }
    report.sample_std = ok > 1 ? std::sqrt(var / (ok - 1)) : 0.0;
    report.std_error = report.sample_std / std::sqrt(static_cast<double>(ok));
    return report;
}

/// Per-rung invariant drift over a strictly decreasing step ladder, with
/// pairwise convergence-order estimates.
inline convergence_table convergence_study(const sde_system& system, integrator_kind method,
                                           std::span<const double> x0, double t0, double T,
                                           std::span<const double> ladder, int trajectories,
                                           std::uint64_t seed, int threads = 0,
                                           const std::string& system_name = "") {
    if (ladder.size() < 2)
        throw config_error("convergence study needs at least two step sizes");
    for (std::size_t i = 1; i < ladder.size(); ++i)
        if (!(ladder[i] < ladder[i - 1]))
            throw config_error("step ladder must be strictly decreasing");
    convergence_table table;
    for (double h : ladder)
        table.rows.push_back(invariant_error(system, method, x0, t0, T, h, trajectories, seed,
                                             threads, system_name));
    for (std::size_t i = 0; i + 1 < table.rows.size(); ++i) {
        const auto& a = table.rows[i];
        const auto& b = table.rows[i + 1];
        table.orders.push_back(std::log(a.epsilon / b.epsilon) / std::log(a.h / b.h));
    }
    return table;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline constexpr const char* report_csv_header = "h,R,epsilon,stderr,aborts";

inline std::string report_csv_row(const error_report& r) {
    std::string out;
    out += detail::full_precision(r.h);
    out += ',';
    out += std::to_string(r.trajectories);
    out += ',';
    out += detail::full_precision(r.epsilon);
    out += ',';
    out += detail::full_precision(r.std_error);
    out += ',';
    out += std::to_string(r.aborts);
    return out;
}

inline std::string export_csv(const error_report& r) {
    return std::string(report_csv_header) + "\n" + report_csv_row(r) + "\n";
}

inline std::string export_csv(const convergence_table& t) {
    std::string out = report_csv_header;
    out += '\n';
    for (const auto& r : t.rows) {
        out += report_csv_row(r);
        out += '\n';
    }
    return out;
}

inline nlohmann::json report_to_json(const error_report& r) {
    nlohmann::json j;
    j["h"] = r.h;
    j["R"] = r.trajectories;
    j["epsilon"] = r.epsilon;
    j["sample_std"] = r.sample_std;
    j["stderr"] = r.std_error;
    j["aborts"] = r.aborts;
    j["seed"] = r.seed;
    j["integrator"] = r.integrator;
    j["system"] = r.system_name;
    j["t0"] = r.t0;
    j["T"] = r.T;
    j["x0"] = r.x0;
    return j;
}

inline std::string export_json(const error_report& r) { return report_to_json(r).dump(2); }

inline std::string export_json(const convergence_table& t) {
    nlohmann::json j;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : t.rows) j["rows"].push_back(report_to_json(r));
    j["orders"] = t.orders;
    return j.dump(2);
}

inline error_report report_from_json(const nlohmann::json& j) {
    error_report r;
    r.h = j.at("h").get<double>();
    r.trajectories = j.at("R").get<int>();
    r.epsilon = j.at("epsilon").get<double>();
    r.sample_std = j.at("sample_std").get<double>();
    r.std_error = j.at("stderr").get<double>();
    r.aborts = j.at("aborts").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.integrator = j.at("integrator").get<std::string>();
    r.system_name = j.at("system").get<std::string>();
    r.t0 = j.at("t0").get<double>();
    r.T = j.at("T").get<double>();
    r.x0 = j.at("x0").get<std::vector<double>>();
    return r;
}

inline error_report parse_report_json(const std::string& text) {
    return report_from_json(nlohmann::json::parse(text));
}

inline convergence_table parse_table_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    convergence_table t;
    for (const auto& row : j.at("rows")) t.rows.push_back(report_from_json(row));
    t.orders = j.at("orders").get<std::vector<double>>();
    return t;
}

/// Parse the fixed-header CSV back into the fields it carries.
inline std::vector<error_report> parse_reports_csv(const std::string& text) {
    std::vector<error_report> out;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != report_csv_header)
        throw config_error("bad report CSV header: \"" + line + "\"");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        error_report r;
        std::istringstream ls(line);
        std::string field;
        std::getline(ls, field, ',');
        r.h = std::stod(field);
        std::getline(ls, field, ',');
        r.trajectories = std::stoi(field);
        std::getline(ls, field, ',');
        r.epsilon = std::stod(field);
        std::getline(ls, field, ',');
        r.std_error = std::stod(field);
        std::getline(ls, field, ',');
        r.aborts = std::stoi(field);
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace invsde
