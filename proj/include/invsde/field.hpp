#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "invsde/autodiff.hpp"
#include "invsde/dual.hpp"
#include "invsde/expr.hpp"

namespace invsde {

using dual1 = dual<double>;
using dual2 = dual<dual<double>>;

/// A time-dependent vector field R x R^n -> R^n evaluable on plain numbers
/// and on dual numbers up to depth two, which covers every derivative the
/// integrators and the Ito/Stratonovich conversion need.
class vector_field {
public:
    explicit vector_field(int dim) : dim_(dim) {}
    virtual ~vector_field() = default;

    int dim() const { return dim_; }

    virtual void eval(double t, std::span<const double> x, std::span<double> out) const = 0;
    virtual void eval(const dual1& t, std::span<const dual1> x, std::span<dual1> out) const = 0;
    virtual void eval(const dual2& t, std::span<const dual2> x, std::span<dual2> out) const = 0;

    std::vector<double> operator()(double t, std::span<const double> x) const {
        std::vector<double> out(dim_);
        eval(t, x, out);
        return out;
    }

private:
    int dim_;
};

namespace detail {

template <class F>
class callable_field final : public vector_field {
public:
    callable_field(int dim, F f) : vector_field(dim), f_(std::move(f)) {}

    void eval(double t, std::span<const double> x, std::span<double> out) const override {
        f_(t, x, out);
    }
    void eval(const dual1& t, std::span<const dual1> x, std::span<dual1> out) const override {
        f_(t, x, out);
    }
    void eval(const dual2& t, std::span<const dual2> x, std::span<dual2> out) const override {
        f_(t, x, out);
    }

private:
    F f_;
};

} // namespace detail

/// Wrap a generic callable f(t, x, out), templated over the scalar type.
template <class F>
std::shared_ptr<const vector_field> make_field(int dim, F f) {
    return std::make_shared<detail::callable_field<F>>(dim, std::move(f));
}

/// Vector field defined by one expression per component.
class expr_field final : public vector_field {
public:
    expr_field(int dim, std::vector<expr> components)
        : vector_field(dim), components_(std::move(components)) {
        if (static_cast<int>(components_.size()) != dim)
            throw dimension_error("component count does not match field dimension");
        for (const auto& c : components_) c.bind(dim);
    }

    const std::vector<expr>& components() const { return components_; }

    void eval(double t, std::span<const double> x, std::span<double> out) const override {
        eval_impl(t, x, out);
    }
    void eval(const dual1& t, std::span<const dual1> x, std::span<dual1> out) const override {
        eval_impl(t, x, out);
    }
    void eval(const dual2& t, std::span<const dual2> x, std::span<dual2> out) const override {
        eval_impl(t, x, out);
    }

private:
    template <class S>
    void eval_impl(const S& t, std::span<const S> x, std::span<S> out) const {
        for (std::size_t i = 0; i < components_.size(); ++i)
            out[i] = components_[i].template evaluate<S>(t, x);
    }

    std::vector<expr> components_;
};

namespace detail {

/// (dF/dx) v by one seeded pass at scalar type S (S is double or dual1;
/// the field itself is then evaluated one dual level higher).
template <class S>
void field_jacvec(const vector_field& F, const S& t, std::span<const S> x,
                  std::span<const S> v, std::span<S> out) {
    const std::size_t n = x.size();
    dual<S> td{t, S(0.0)};
    std::array<dual<S>, max_dim> xd;
    for (std::size_t i = 0; i < n; ++i) xd[i] = dual<S>{x[i], v[i]};
    std::array<dual<S>, max_dim> od;
    F.eval(td, std::span<const dual<S>>(xd.data(), n), std::span<dual<S>>(od.data(), n));
    for (std::size_t i = 0; i < n; ++i) out[i] = od[i].dot;
}

/// Dense Jacobian of a field, row-major, one seeded pass per column.
inline void field_jacobian(const vector_field& F, double t, std::span<const double> x,
                           std::span<double> out) {
    const std::size_t n = x.size();
    dual1 td{t, 0.0};
    std::array<dual1, max_dim> xd;
    for (std::size_t i = 0; i < n; ++i) xd[i] = dual1{x[i], 0.0};
    std::array<dual1, max_dim> od;
    for (std::size_t j = 0; j < n; ++j) {
        xd[j].dot = 1.0;
        F.eval(td, std::span<const dual1>(xd.data(), n), std::span<dual1>(od.data(), n));
        for (std::size_t i = 0; i < n; ++i) out[i * n + j] = od[i].dot;
        xd[j].dot = 0.0;
    }
}

} // namespace detail

} // namespace invsde
