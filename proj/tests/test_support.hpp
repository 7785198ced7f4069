#pragma once

// Shared test oracles: finite differences and random sampling. These stay
// independent of the dual-number production path they are used to check.

#include "invsde/expr.hpp"
#include "invsde/rng.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace testsupport {

inline double eval(const invsde::expr& e, double t, std::span<const double> x) {
    return e.evaluate<double>(t, x);
}

/// Central finite-difference gradient in x with the given step.
inline std::vector<double> fd_gradient_x(const invsde::expr& e, double t,
                                         std::vector<double> x, double step = 1e-6) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double keep = x[i];
        x[i] = keep + step;
        double hi = eval(e, t, x);
        x[i] = keep - step;
        double lo = eval(e, t, x);
        x[i] = keep;
        g[i] = (hi - lo) / (2.0 * step);
    }
    return g;
}

inline double fd_partial_t(const invsde::expr& e, double t, std::span<const double> x,
                           double step = 1e-6) {
    return (eval(e, t + step, x) - eval(e, t - step, x)) / (2.0 * step);
}

/// Central finite-difference Jacobian of a component list, row-major.
inline std::vector<double> fd_jacobian(std::span<const invsde::expr> F, double t,
                                       std::vector<double> x, double step = 1e-6) {
    const std::size_t n = x.size();
    std::vector<double> out(F.size() * n);
    for (std::size_t j = 0; j < n; ++j) {
        double keep = x[j];
        x[j] = keep + step;
        std::vector<double> hi;
        for (const auto& f : F) hi.push_back(eval(f, t, x));
        x[j] = keep - step;
        std::vector<double> lo;
        for (const auto& f : F) lo.push_back(eval(f, t, x));
        x[j] = keep;
        for (std::size_t i = 0; i < F.size(); ++i)
            out[i * n + j] = (hi[i] - lo[i]) / (2.0 * step);
    }
    return out;
}

inline std::vector<double> random_point(invsde::counter_rng& rng, std::size_t n, double lo,
                                        double hi) {
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform_range(lo, hi);
    return x;
}

/// |a - b| <= tol * max(1, |a|, |b|)
inline bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

} // namespace testsupport
