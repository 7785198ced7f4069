#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "invsde/expr.hpp"
#include "invsde/synthesis.hpp"

namespace invsde {

/// Scalar type whose arithmetic builds expression trees. Evaluating a
/// coefficient field over symbolic scalars (and duals of them) regenerates
/// the coefficient as expression text. Construction folds constants and the
/// 0/1 identities so the output stays readable.
class symbolic {
public:
    symbolic() : tree_(expr::constant(0.0)) {}
    symbolic(double c) : tree_(expr::constant(c)) {}
    explicit symbolic(expr e) : tree_(std::move(e)) {}

    const expr& tree() const { return tree_; }

    bool is_constant() const { return tree_.is_constant(); }
    double constant() const { return tree_.constant_value(); }

    friend symbolic operator-(const symbolic& a) {
        if (a.is_constant()) return symbolic(-a.constant());
        return symbolic(-expr(a.tree_));
    }

    friend symbolic operator+(const symbolic& a, const symbolic& b) {
        if (a.is_constant() && b.is_constant()) return symbolic(a.constant() + b.constant());
        if (a.is_constant() && a.constant() == 0.0) return b;
        if (b.is_constant() && b.constant() == 0.0) return a;
        return symbolic(expr(a.tree_) + b.tree_);
    }

    friend symbolic operator-(const symbolic& a, const symbolic& b) {
        if (a.is_constant() && b.is_constant()) return symbolic(a.constant() - b.constant());
        if (b.is_constant() && b.constant() == 0.0) return a;
        if (a.is_constant() && a.constant() == 0.0) return -b;
        return symbolic(expr(a.tree_) - b.tree_);
    }

    friend symbolic operator*(const symbolic& a, const symbolic& b) {
        if (a.is_constant() && b.is_constant()) return symbolic(a.constant() * b.constant());
        if ((a.is_constant() && a.constant() == 0.0) ||
            (b.is_constant() && b.constant() == 0.0))
            return symbolic(0.0);
        if (a.is_constant() && a.constant() == 1.0) return b;
        if (b.is_constant() && b.constant() == 1.0) return a;
        return symbolic(expr(a.tree_) * b.tree_);
    }

    friend symbolic operator/(const symbolic& a, const symbolic& b) {
        if (a.is_constant() && b.is_constant() && b.constant() != 0.0)
            return symbolic(a.constant() / b.constant());
        if (a.is_constant() && a.constant() == 0.0) return symbolic(0.0);
        if (b.is_constant() && b.constant() == 1.0) return a;
        return symbolic(expr(a.tree_) / b.tree_);
    }

    friend symbolic operator+(const symbolic& a, double b) { return a + symbolic(b); }
    friend symbolic operator+(double a, const symbolic& b) { return symbolic(a) + b; }
    friend symbolic operator-(const symbolic& a, double b) { return a - symbolic(b); }
    friend symbolic operator-(double a, const symbolic& b) { return symbolic(a) - b; }
    friend symbolic operator*(const symbolic& a, double b) { return a * symbolic(b); }
    friend symbolic operator*(double a, const symbolic& b) { return symbolic(a) * b; }
    friend symbolic operator/(const symbolic& a, double b) { return a / symbolic(b); }
    friend symbolic operator/(double a, const symbolic& b) { return symbolic(a) / b; }

private:
    expr tree_;

    static symbolic wrap(func_kind f, const symbolic& a) {
        return symbolic(expr::call(f, expr(a.tree_)));
    }

    friend symbolic sin(const symbolic& a) {
        return a.is_constant() ? symbolic(std::sin(a.constant())) : wrap(func_kind::sin, a);
    }
    friend symbolic cos(const symbolic& a) {
        return a.is_constant() ? symbolic(std::cos(a.constant())) : wrap(func_kind::cos, a);
    }
    friend symbolic sinh(const symbolic& a) {
        return a.is_constant() ? symbolic(std::sinh(a.constant())) : wrap(func_kind::sinh, a);
    }
    friend symbolic cosh(const symbolic& a) {
        return a.is_constant() ? symbolic(std::cosh(a.constant())) : wrap(func_kind::cosh, a);
    }
    friend symbolic tanh(const symbolic& a) {
        return a.is_constant() ? symbolic(std::tanh(a.constant())) : wrap(func_kind::tanh, a);
    }
    friend symbolic exp(const symbolic& a) {
        return a.is_constant() ? symbolic(std::exp(a.constant())) : wrap(func_kind::exp, a);
    }
    friend symbolic log(const symbolic& a) {
        return a.is_constant() ? symbolic(std::log(a.constant())) : wrap(func_kind::ln, a);
    }
    friend symbolic sqrt(const symbolic& a) {
        return a.is_constant() ? symbolic(std::sqrt(a.constant())) : wrap(func_kind::sqrt, a);
    }
    friend symbolic abs(const symbolic& a) {
        return a.is_constant() ? symbolic(std::abs(a.constant())) : wrap(func_kind::abs, a);
    }
    friend symbolic pow(const symbolic& a, double c) {
        if (a.is_constant()) return symbolic(std::pow(a.constant(), c));
        if (c == 1.0) return a;
        if (c == 0.0) return symbolic(1.0);
        return symbolic(expr::binary(node_kind::power, expr(a.tree_), expr::constant(c)));
    }
    friend symbolic pow(const symbolic& a, const symbolic& b) {
        if (b.is_constant()) return pow(a, b.constant());
        return symbolic(expr::binary(node_kind::power, expr(a.tree_), expr(b.tree_)));
    }
};

/// d|u| = (|u|/u) u', valid away from u = 0; replaces the sign-based rule
/// used for numeric duals.
inline dual<symbolic> abs(const dual<symbolic>& a) {
    using std::abs;
    symbolic m = abs(a.val);
    return {m, (m / a.val) * a.dot};
}

// ---------------------------------------------------------------------------
// Coefficient regeneration
// ---------------------------------------------------------------------------

/// Coefficient functions of a synthesized system as expression trees.
struct coefficient_text {
    std::vector<std::vector<expr>> sigma; // s columns of n components
    std::vector<expr> stratonovich_drift;
    std::vector<expr> ito_drift;
    std::vector<expr> sigma_correction;
};

/// Regenerate the coefficients of a provenance-bearing system as expression
/// text. Projected bases vary their vector subset from point to point, so a
/// reference point pins the subset used for printing.
inline coefficient_text coefficient_expressions(const sde_system& system,
                                                double reference_t = 0.0,
                                                std::span<const double> reference_x = {}) {
    if (!system.provenance)
        throw config_error("coefficient text needs a synthesized system with provenance");
    const invariant_spec& spec = system.provenance->spec;
    const coefficient_choice& choice = system.provenance->choice;
    detail::synth_core core(spec, choice);
    const int n = spec.n;
    if (spec.kind == basis_kind::projected) {
        if (static_cast<int>(reference_x.size()) != n)
            throw config_error("projected basis needs a reference point to pin the "
                               "vector subset for printing");
        std::vector<double> G(n);
        detail::gradient_x<double>(spec.M, reference_t, reference_x, G);
        detail::basis_buf<double> cand;
        const int count = detail::projected_candidates<double>(std::span<const double>(G), cand);
        core.fixed_projected_selection =
            detail::select_independent(cand, count, n, linalg::norm(G));
        if (static_cast<int>(core.fixed_projected_selection.size()) != n - 1)
            throw zero_gradient_error("projected basis degenerates at the reference point");
    }

    std::vector<symbolic> xs;
    for (int i = 1; i <= n; ++i) xs.emplace_back(expr::x(i));
    symbolic ts(expr::t());
    std::span<const symbolic> xspan(xs.data(), xs.size());

    coefficient_text out;
    detail::vec_buf<symbolic> buf;
    for (int l = 1; l <= choice.s; ++l) {
        core.diffusion_column<symbolic>(l, ts, xspan, std::span<symbolic>(buf.data(), n));
        std::vector<expr> col;
        for (int i = 0; i < n; ++i) col.push_back(buf[i].tree());
        out.sigma.push_back(std::move(col));
    }
    core.stratonovich_drift<symbolic>(ts, xspan, std::span<symbolic>(buf.data(), n));
    std::vector<symbolic> drift(buf.begin(), buf.begin() + n);
    for (int i = 0; i < n; ++i) out.stratonovich_drift.push_back(drift[i].tree());

    // Sigma = 1/2 sum_l (d sigma_l / dx) sigma_l over the regenerated trees.
    std::vector<symbolic> sigma_sum(n, symbolic(0.0));
    detail::vec_buf<symbolic> jv;
    for (const auto& col : out.sigma) {
        std::vector<symbolic> colv;
        for (const auto& c : col) colv.emplace_back(c);
        detail::jacvec_components<symbolic>(col, ts, xspan,
                                            std::span<const symbolic>(colv.data(), n),
                                            std::span<symbolic>(jv.data(), n));
        for (int i = 0; i < n; ++i) sigma_sum[i] = sigma_sum[i] + 0.5 * jv[i];
    }
    for (int i = 0; i < n; ++i) {
        out.sigma_correction.push_back(sigma_sum[i].tree());
        out.ito_drift.push_back((drift[i] + sigma_sum[i]).tree());
    }
    return out;
}

} // namespace invsde
