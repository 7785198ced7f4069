#pragma once

#include <array>
#include <span>
#include <vector>

#include "invsde/dual.hpp"
#include "invsde/expr.hpp"

namespace invsde {

inline constexpr int max_dim = 16;

struct gradient_result {
    double g0 = 0.0;            // dM/dt
    std::vector<double> G;      // dM/dx_i
};

namespace detail {

/// dF/dt at scalar type S via one tangent pass.
template <class S>
S partial_t(const expr& f, const S& t, std::span<const S> x) {
    dual<S> td{t, S(1.0)};
    std::array<dual<S>, max_dim> xd;
    for (std::size_t i = 0; i < x.size(); ++i) xd[i] = dual<S>{x[i], S(0.0)};
    return f.template evaluate<dual<S>>(td, std::span<const dual<S>>(xd.data(), x.size())).dot;
}

/// Gradient in x at scalar type S, one tangent pass per component.
template <class S>
void gradient_x(const expr& f, const S& t, std::span<const S> x, std::span<S> out) {
    dual<S> td{t, S(0.0)};
    std::array<dual<S>, max_dim> xd;
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) xd[i] = dual<S>{x[i], S(0.0)};
    for (std::size_t i = 0; i < n; ++i) {
        xd[i].dot = S(1.0);
        out[i] = f.template evaluate<dual<S>>(td, std::span<const dual<S>>(xd.data(), n)).dot;
        xd[i].dot = S(0.0);
    }
}

/// Directional derivative (dF/dx) v of a component list at scalar type S.
template <class S>
void jacvec_components(std::span<const expr> F, const S& t, std::span<const S> x,
                       std::span<const S> v, std::span<S> out) {
    dual<S> td{t, S(0.0)};
    std::array<dual<S>, max_dim> xd;
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) xd[i] = dual<S>{x[i], v[i]};
    std::span<const dual<S>> xs(xd.data(), n);
    for (std::size_t i = 0; i < F.size(); ++i)
        out[i] = F[i].template evaluate<dual<S>>(td, xs).dot;
}

} // namespace detail

/// (dM/dt, grad_x M) at a point, exact to dual-arithmetic precision.
inline gradient_result gradient(const expr& f, double t, std::span<const double> x) {
    gradient_result r;
    r.G.resize(x.size());
    detail::gradient_x<double>(f, t, x, r.G);
    r.g0 = f.free_variables().uses_t ? detail::partial_t<double>(f, t, x) : 0.0;
    return r;
}

/// Jacobian of a component list: entry (i,j) = dF_i/dx_j, row-major.
inline std::vector<double> jacobian(std::span<const expr> F, double t,
                                    std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<double> out(F.size() * n, 0.0);
    dual<double> td{t, 0.0};
    std::array<dual<double>, max_dim> xd;
    for (std::size_t i = 0; i < n; ++i) xd[i] = dual<double>{x[i], 0.0};
    std::span<const dual<double>> xs(xd.data(), n);
    for (std::size_t j = 0; j < n; ++j) {
        xd[j].dot = 1.0;
        for (std::size_t i = 0; i < F.size(); ++i)
            out[i * n + j] = F[i].evaluate<dual<double>>(td, xs).dot;
        xd[j].dot = 0.0;
    }
    return out;
}

/// Jacobian-vector product (dF/dx) v in a single seeded pass.
inline std::vector<double> jacvec(std::span<const expr> F, double t,
                                  std::span<const double> x, std::span<const double> v) {
    std::vector<double> out(F.size(), 0.0);
    detail::jacvec_components<double>(F, t, x, v, out);
    return out;
}

} // namespace invsde
