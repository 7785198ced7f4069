#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "invsde/field.hpp"
#include "invsde/geometry.hpp"

namespace invsde {

enum class interpretation : std::uint8_t { ito, stratonovich };

inline const char* to_string(interpretation i) {
    return i == interpretation::ito ? "ito" : "stratonovich";
}

/// First integral plus the basis configuration used to span its tangent
/// hyperplane.
struct invariant_spec {
    int n = 0;
    expr M;
    basis_kind kind = basis_kind::general;
    bool time_dependent = false;
    std::vector<bool> zero_mask; // identically-zero gradient components (syntactic)

    /// Resolve a spec from M and a basis request. An empty request picks the
    /// pair-permutation basis for n in {2,4,8}, its projection for {3,5,6,7},
    /// and the chain basis otherwise.
    static invariant_spec make(int n, expr M, const std::string& basis_request = "auto") {
        if (n < 2) throw dimension_error("system dimension must be at least 2");
        if (n > max_dim)
            throw dimension_error("system dimension exceeds supported maximum of " +
                                  std::to_string(max_dim));
        M.bind(n);
        invariant_spec spec;
        spec.n = n;
        var_set vars = M.free_variables();
        if (!vars.uses_t && vars.indices.empty())
            throw config_error("first integral must be a nonconstant function");
        spec.time_dependent = vars.uses_t;
        spec.zero_mask.assign(n, true);
        for (int i : vars.indices) spec.zero_mask[i - 1] = false;
        spec.M = std::move(M);
        if (basis_request == "auto" || basis_request.empty()) {
            if (n == 2 || n == 4 || n == 8)
                spec.kind = n == 2 ? basis_kind::special2
                                   : n == 4 ? basis_kind::special4 : basis_kind::special8;
            else if (n <= 7)
                spec.kind = basis_kind::projected;
            else
                spec.kind = basis_kind::general;
        } else if (basis_request == "general") {
            spec.kind = basis_kind::general;
        } else if (basis_request == "special") {
            if (n != 2 && n != 4 && n != 8)
                throw config_error("basis \"special\" needs n in {2,4,8}, got n=" +
                                   std::to_string(n));
            spec.kind = n == 2 ? basis_kind::special2
                               : n == 4 ? basis_kind::special4 : basis_kind::special8;
        } else if (basis_request == "projected") {
            if (n != 3 && n != 5 && n != 6 && n != 7)
                throw config_error("basis \"projected\" needs n in {3,5,6,7}, got n=" +
                                   std::to_string(n));
            spec.kind = basis_kind::projected;
        } else if (basis_request == "supplemented") {
            spec.kind = basis_kind::supplemented;
        } else {
            throw config_error("unknown basis kind \"" + basis_request + "\"");
        }
        return spec;
    }
};

/// Free coefficient functions u_j^l: column l = 0 feeds the drift, columns
/// 1..s feed the diffusion. Missing entries mean the zero function.
struct coefficient_choice {
    int s = 1;
    std::vector<std::vector<std::optional<expr>>> u; // [n-1][s+1]

    coefficient_choice() = default;
    coefficient_choice(int n, int s) : s(s) {
        if (s < 0) throw config_error("noise count must be non-negative");
        u.assign(n - 1, std::vector<std::optional<expr>>(s + 1));
    }

    void set(int j, int l, expr e) {
        if (j < 1 || j > static_cast<int>(u.size()))
            throw config_error("coefficient index j=" + std::to_string(j) +
                               " outside 1..n-1");
        if (l < 0 || l > s)
            throw config_error("coefficient index l=" + std::to_string(l) + " outside 0..s");
        u[j - 1][l] = std::move(e);
    }

    const std::optional<expr>& at(int j, int l) const { return u[j - 1][l]; }
};

struct sde_provenance {
    invariant_spec spec;
    coefficient_choice choice;
};

/// An SDE dX = drift dt + sum_l diffusion_l dW_l under the stated
/// interpretation. Systems synthesized from a first integral carry their
/// provenance; hand-entered systems do not.
struct sde_system {
    int n = 0;
    int s = 0;
    interpretation interp = interpretation::ito;
    std::shared_ptr<const vector_field> drift;
    std::vector<std::shared_ptr<const vector_field>> diffusion;
    std::shared_ptr<const sde_provenance> provenance;
    std::shared_ptr<const expr> invariant;  // M when known
    bool sphere_analytic = false;           // closed-form rotation solution applies
};

// ---------------------------------------------------------------------------
// Synthesized coefficient evaluators
// ---------------------------------------------------------------------------

namespace detail {

/// Shared evaluation core for every coefficient field of one synthesized
/// system: gradient of M, tangent vectors, and the linear combinations.
struct synth_core {
    invariant_spec spec;
    coefficient_choice choice;
    std::vector<int> permutation; // supplemented reordering (empty otherwise)
    int block = 0;                // supplemented dependent-block size
    bool ends_only = false;       // supplemented request degraded to chain basis
    std::vector<int> fixed_projected_selection; // pinned subset for symbolic output

    explicit synth_core(invariant_spec s, coefficient_choice c)
        : spec(std::move(s)), choice(std::move(c)) {
        if (static_cast<int>(choice.u.size()) != spec.n - 1)
            throw dimension_error("coefficient table must have n-1 rows");
        for (const auto& row : choice.u)
            for (const auto& cell : row)
                if (cell) cell->bind(spec.n);
        if (spec.kind == basis_kind::supplemented) {
            for (int i = 0; i < spec.n; ++i)
                if (!spec.zero_mask[i]) ++block;
            if (block == 0)
                throw config_error("first integral does not depend on any state variable");
            ends_only = chain_suffices(spec.zero_mask);
            if (!ends_only) permutation = trailing_zero_permutation(spec.zero_mask);
        }
    }

    template <class S>
    void gradient(const S& t, std::span<const S> x, std::span<S> G, S* g0) const {
        gradient_x<S>(spec.M, t, x, G);
        if (g0) *g0 = spec.time_dependent ? partial_t<S>(spec.M, t, x) : S(0.0);
    }

    /// Tangent vectors at scalar type S. For the projected kind the greedy
    /// subset is selected from the passive values at this point.
    template <class S>
    void tangent(std::span<const S> G, basis_buf<S>& N) const {
        const int n = spec.n;
        switch (spec.kind) {
        case basis_kind::general:
        case basis_kind::time_extended:
            chain_vectors<S>(G, N);
            return;
        case basis_kind::special2:
        case basis_kind::special4:
        case basis_kind::special8:
            special_vectors<S>(G, N);
            return;
        case basis_kind::projected: {
            basis_buf<S> cand;
            const int count = projected_candidates<S>(G, cand);
            std::vector<int> chosen;
            if (!fixed_projected_selection.empty()) {
                chosen = fixed_projected_selection;
            } else if constexpr (has_passive_value<S>) {
                basis_buf<double> passive;
                double norm2 = 0.0;
                for (int i = 0; i < n; ++i) {
                    double g = passive_value(G[i]);
                    norm2 += g * g;
                }
                for (int j = 0; j < count; ++j)
                    for (int i = 0; i < n; ++i) passive[j][i] = passive_value(cand[j][i]);
                chosen = select_independent(passive, count, n, std::sqrt(norm2));
            } else {
                throw config_error(
                    "projected basis needs a reference point to pin the vector subset");
            }
            if (static_cast<int>(chosen.size()) != n - 1)
                throw zero_gradient_error("projected basis has rank below n-1 at this point");
            for (int j = 0; j < n - 1; ++j)
                for (int i = 0; i < n; ++i) N[j][i] = cand[chosen[j]][i];
            return;
        }
        case basis_kind::supplemented:
            if (ends_only)
                chain_vectors<S>(G, N);
            else
                supplemented_vectors<S>(G, permutation, block, N);
            return;
        }
        throw config_error("unsupported basis kind");
    }

    template <class S>
    void diffusion_column(int l, const S& t, std::span<const S> x, std::span<S> out) const {
        const int n = spec.n;
        vec_buf<S> G;
        gradient<S>(t, x, std::span<S>(G.data(), n), nullptr);
        basis_buf<S> N;
        tangent<S>(std::span<const S>(G.data(), n), N);
        for (int i = 0; i < n; ++i) out[i] = S(0.0);
        for (int j = 0; j < n - 1; ++j) {
            const auto& uj = choice.u[j][l];
            if (!uj) continue;
            S c = uj->template evaluate<S>(t, x);
            for (int i = 0; i < n; ++i) out[i] = out[i] + c * N[j][i];
        }
    }

    template <class S>
    void stratonovich_drift(const S& t, std::span<const S> x, std::span<S> out) const {
        const int n = spec.n;
        vec_buf<S> G;
        S g0{};
        gradient<S>(t, x, std::span<S>(G.data(), n), &g0);
        basis_buf<S> N;
        tangent<S>(std::span<const S>(G.data(), n), N);
        for (int i = 0; i < n; ++i) out[i] = S(0.0);
        if (spec.time_dependent) {
            // N0 = (-g0/g1, 0, ..., 0); requires g1 != 0 on the trajectory.
            if constexpr (has_passive_value<S>) {
                double g1 = passive_value(G[0]);
                double norm2 = 0.0;
                for (int i = 0; i < n; ++i) {
                    double g = passive_value(G[i]);
                    norm2 += g * g;
                }
                if (std::abs(g1) <= degeneracy_tol(std::sqrt(norm2)))
                    throw degenerate_pivot_error(
                        "drift offset N0 undefined: g1 is zero at this point");
            }
            out[0] = -g0 / G[0];
        }
        for (int j = 0; j < n - 1; ++j) {
            const auto& uj = choice.u[j][0];
            if (!uj) continue;
            S c = uj->template evaluate<S>(t, x);
            for (int i = 0; i < n; ++i) out[i] = out[i] + c * N[j][i];
        }
    }
};

class synth_diffusion_field final : public vector_field {
public:
    synth_diffusion_field(std::shared_ptr<const synth_core> core, int column)
        : vector_field(core->spec.n), core_(std::move(core)), column_(column) {}

    void eval(double t, std::span<const double> x, std::span<double> out) const override {
        core_->diffusion_column<double>(column_, t, x, out);
    }
    void eval(const dual1& t, std::span<const dual1> x, std::span<dual1> out) const override {
        core_->diffusion_column<dual1>(column_, t, x, out);
    }
    void eval(const dual2& t, std::span<const dual2> x, std::span<dual2> out) const override {
        core_->diffusion_column<dual2>(column_, t, x, out);
    }

private:
    std::shared_ptr<const synth_core> core_;
    int column_;
};

class synth_drift_field final : public vector_field {
public:
    explicit synth_drift_field(std::shared_ptr<const synth_core> core)
        : vector_field(core->spec.n), core_(std::move(core)) {}

    void eval(double t, std::span<const double> x, std::span<double> out) const override {
        core_->stratonovich_drift<double>(t, x, out);
    }
    void eval(const dual1& t, std::span<const dual1> x, std::span<dual1> out) const override {
        core_->stratonovich_drift<dual1>(t, x, out);
    }
    void eval(const dual2& t, std::span<const dual2> x, std::span<dual2> out) const override {
        core_->stratonovich_drift<dual2>(t, x, out);
    }

private:
    std::shared_ptr<const synth_core> core_;
};

/// Drift correction Sigma = 1/2 sum_l (d sigma_l / dx) sigma_l. Supports
/// evaluation up to dual depth one (its own derivative), which keeps the
/// diffusion fields within their depth-two contract.
class sigma_correction_field final : public vector_field {
public:
    sigma_correction_field(int dim, std::vector<std::shared_ptr<const vector_field>> diffusion)
        : vector_field(dim), diffusion_(std::move(diffusion)) {}

    void eval(double t, std::span<const double> x, std::span<double> out) const override {
        eval_impl<double>(t, x, out);
    }
    void eval(const dual1& t, std::span<const dual1> x, std::span<dual1> out) const override {
        eval_impl<dual1>(t, x, out);
    }
    void eval(const dual2&, std::span<const dual2>, std::span<dual2>) const override {
        throw config_error("second derivatives of the drift correction are not supported");
    }

private:
    template <class S>
    void eval_impl(const S& t, std::span<const S> x, std::span<S> out) const {
        const std::size_t n = x.size();
        for (std::size_t i = 0; i < n; ++i) out[i] = S(0.0);
        vec_buf<S> col, jv;
        for (const auto& sigma : diffusion_) {
            sigma->eval(t, x, std::span<S>(col.data(), n));
            field_jacvec<S>(*sigma, t, x, std::span<const S>(col.data(), n),
                            std::span<S>(jv.data(), n));
            for (std::size_t i = 0; i < n; ++i) out[i] = out[i] + 0.5 * jv[i];
        }
    }

    std::vector<std::shared_ptr<const vector_field>> diffusion_;
};

/// base plus or minus the drift correction of the given diffusion columns.
class shifted_drift_field final : public vector_field {
public:
    shifted_drift_field(std::shared_ptr<const vector_field> base,
                        std::shared_ptr<const vector_field> sigma, double sign)
        : vector_field(base->dim()), base_(std::move(base)), sigma_(std::move(sigma)),
          sign_(sign) {}

    void eval(double t, std::span<const double> x, std::span<double> out) const override {
        eval_impl<double>(t, x, out);
    }
    void eval(const dual1& t, std::span<const dual1> x, std::span<dual1> out) const override {
        eval_impl<dual1>(t, x, out);
    }
    void eval(const dual2& t, std::span<const dual2> x, std::span<dual2> out) const override {
        eval_impl<dual2>(t, x, out);
    }

private:
    template <class S>
    void eval_impl(const S& t, std::span<const S> x, std::span<S> out) const {
        const std::size_t n = x.size();
        base_->eval(t, x, out);
        vec_buf<S> shift;
        sigma_->eval(t, x, std::span<S>(shift.data(), n));
        for (std::size_t i = 0; i < n; ++i) out[i] = out[i] + sign_ * shift[i];
    }

    std::shared_ptr<const vector_field> base_;
    std::shared_ptr<const vector_field> sigma_;
    double sign_;
};

} // namespace detail

/// Assemble the invariant system for a first integral and coefficient
/// choice, under the requested interpretation.
inline sde_system synthesize_system(invariant_spec spec, coefficient_choice choice,
                                    interpretation interp = interpretation::stratonovich) {
    auto core = std::make_shared<const detail::synth_core>(spec, choice);
    sde_system sys;
    sys.n = spec.n;
    sys.s = choice.s;
    sys.interp = interp;
    sys.invariant = std::make_shared<const expr>(spec.M);
    sys.provenance = std::make_shared<const sde_provenance>(
        sde_provenance{std::move(spec), std::move(choice)});
    for (int l = 1; l <= sys.s; ++l)
        sys.diffusion.push_back(std::make_shared<detail::synth_diffusion_field>(core, l));
    auto strat = std::make_shared<detail::synth_drift_field>(core);
    if (interp == interpretation::stratonovich) {
        sys.drift = strat;
    } else {
        auto sigma = std::make_shared<detail::sigma_correction_field>(sys.n, sys.diffusion);
        sys.drift = std::make_shared<detail::shifted_drift_field>(strat, sigma, +1.0);
    }
    return sys;
}

/// Hand-entered system from component expressions.
inline sde_system make_explicit_system(int n, interpretation interp,
                                       std::vector<expr> drift,
                                       std::vector<std::vector<expr>> diffusion_columns,
                                       std::optional<expr> invariant = std::nullopt) {
    sde_system sys;
    sys.n = n;
    sys.s = static_cast<int>(diffusion_columns.size());
    sys.interp = interp;
    sys.drift = std::make_shared<expr_field>(n, std::move(drift));
    for (auto& col : diffusion_columns)
        sys.diffusion.push_back(std::make_shared<expr_field>(n, std::move(col)));
    if (invariant) {
        invariant->bind(n);
        sys.invariant = std::make_shared<const expr>(std::move(*invariant));
    }
    return sys;
}

// ---------------------------------------------------------------------------
// Pointwise operations
// ---------------------------------------------------------------------------

/// Diffusion columns sigma_l = sum_j u_j^l N_j at a point.
inline std::vector<std::vector<double>> build_diffusion(const invariant_spec& spec,
                                                        const coefficient_choice& choice,
                                                        double t, std::span<const double> x) {
    detail::synth_core core(spec, choice);
    std::vector<std::vector<double>> out;
    for (int l = 1; l <= choice.s; ++l) {
        std::vector<double> col(spec.n);
        core.diffusion_column<double>(l, t, x, col);
        out.push_back(std::move(col));
    }
    return out;
}

/// Stratonovich drift a = N0 + sum_j u_j^0 N_j at a point.
inline std::vector<double> build_stratonovich_drift(const invariant_spec& spec,
                                                    const coefficient_choice& choice,
                                                    double t, std::span<const double> x) {
    detail::synth_core core(spec, choice);
    std::vector<double> out(spec.n);
    core.stratonovich_drift<double>(t, x, out);
    return out;
}

/// Drift correction Sigma of a system at a point.
inline std::vector<double> sigma_correction(const sde_system& system, double t,
                                            std::span<const double> x) {
    detail::sigma_correction_field f(system.n, system.diffusion);
    std::vector<double> out(system.n);
    f.eval(t, x, std::span<double>(out));
    return out;
}

/// Ito drift f = a + Sigma at a point.
inline std::vector<double> build_ito_drift(const invariant_spec& spec,
                                           const coefficient_choice& choice, double t,
                                           std::span<const double> x) {
    sde_system sys = synthesize_system(spec, choice, interpretation::ito);
    std::vector<double> out(spec.n);
    sys.drift->eval(t, x, std::span<double>(out));
    return out;
}

/// Recast a system under the other interpretation by shifting the drift
/// with Sigma; the diffusion is unchanged.
inline sde_system convert_interpretation(const sde_system& system, interpretation target) {
    if (system.interp == target) return system;
    sde_system out = system;
    out.interp = target;
    auto sigma = std::make_shared<detail::sigma_correction_field>(system.n, system.diffusion);
    // Ito f = a + Sigma; Stratonovich a = f - Sigma.
    double sign = target == interpretation::ito ? +1.0 : -1.0;
    out.drift = std::make_shared<detail::shifted_drift_field>(system.drift, sigma, sign);
    return out;
}

// ---------------------------------------------------------------------------
// Invariance residuals
// ---------------------------------------------------------------------------

struct sample_point {
    double t = 0.0;
    std::vector<double> x;
};

struct residual_report {
    double max_diffusion = 0.0; // worst normalized (sigma_l, grad M)
    double max_drift = 0.0;     // worst normalized drift condition
    double max_residual = 0.0;
    sample_point worst;
    std::string worst_condition;
};

/// Evaluate the first-integral conditions at the sample points:
/// (sigma_l, grad M) = 0 for each l, and dM/dt + (drift_eff, grad M) = 0
/// where drift_eff is f - Sigma (Ito) or a (Stratonovich). Residuals are
/// normalized by the gradient and coefficient magnitudes and reported, not
/// thrown.
inline residual_report invariance_residuals(const sde_system& system, const expr& M,
                                            std::span<const sample_point> points) {
    M.bind(system.n);
    const int n = system.n;
    const bool time_dependent = M.free_variables().uses_t;
    sde_system strat = system.interp == interpretation::stratonovich
                           ? system
                           : convert_interpretation(system, interpretation::stratonovich);
    residual_report report;
    std::vector<double> G(n), col(n), drift(n);
    auto note = [&](double r, const sample_point& p, const std::string& cond) {
        if (r > report.max_residual) {
            report.max_residual = r;
            report.worst = p;
            report.worst_condition = cond;
        }
    };
    for (const auto& p : points) {
        std::span<const double> x(p.x);
        detail::gradient_x<double>(M, p.t, x, G);
        double g0 = time_dependent ? detail::partial_t<double>(M, p.t, x) : 0.0;
        double gnorm = linalg::norm(G);
        double gtnorm = std::sqrt(gnorm * gnorm + g0 * g0);
        for (int l = 0; l < system.s; ++l) {
            system.diffusion[l]->eval(p.t, x, std::span<double>(col));
            double r = std::abs(linalg::dot(col, G)) /
                       (std::max(gnorm, 1e-300) * (1.0 + linalg::norm(col)));
            report.max_diffusion = std::max(report.max_diffusion, r);
            note(r, p, "diffusion column " + std::to_string(l + 1));
        }
        strat.drift->eval(p.t, x, std::span<double>(drift));
        double r = std::abs(g0 + linalg::dot(drift, G)) /
                   (std::max(gtnorm, 1e-300) * (1.0 + linalg::norm(drift)));
        report.max_drift = std::max(report.max_drift, r);
        note(r, p, "drift condition");
    }
    return report;
}

} // namespace invsde
