#pragma once

#include <cmath>
#include <utility>

namespace invsde {

/// Forward-mode dual number carrying one tangent slot. Directional
/// derivatives come from seeding `dot`; gradients and Jacobians are
/// assembled from one pass per direction. Nesting (dual<dual<double>>)
/// gives second derivatives, which is as deep as the library ever goes.
template <class T>
struct dual {
    T val{};
    T dot{};

    dual() = default;
    dual(double v) : val(v), dot(0.0) {}
    dual(T v, T d) : val(std::move(v)), dot(std::move(d)) {}
};

inline double passive_value(double x) { return x; }

template <class T>
double passive_value(const dual<T>& a) {
    return passive_value(a.val);
}

template <class T>
struct is_dual_scalar : std::false_type {};
template <>
struct is_dual_scalar<double> : std::true_type {};
template <class T>
struct is_dual_scalar<dual<T>> : is_dual_scalar<T> {};

/// True for scalar types that carry a numeric value part (double and
/// nested duals); false for purely symbolic scalars.
template <class T>
inline constexpr bool has_passive_value = is_dual_scalar<T>::value;

// ---------------------------------------------------------------------------
// Arithmetic
// ---------------------------------------------------------------------------

template <class T>
dual<T> operator-(const dual<T>& a) {
    return {-a.val, -a.dot};
}

template <class T>
dual<T> operator+(const dual<T>& a, const dual<T>& b) {
    return {a.val + b.val, a.dot + b.dot};
}

template <class T>
dual<T> operator-(const dual<T>& a, const dual<T>& b) {
    return {a.val - b.val, a.dot - b.dot};
}

template <class T>
dual<T> operator*(const dual<T>& a, const dual<T>& b) {
    return {a.val * b.val, a.dot * b.val + a.val * b.dot};
}

template <class T>
dual<T> operator/(const dual<T>& a, const dual<T>& b) {
    T q = a.val / b.val;
    return {q, (a.dot - q * b.dot) / b.val};
}

template <class T> dual<T> operator+(const dual<T>& a, double b) { return a + dual<T>(b); }
template <class T> dual<T> operator+(double a, const dual<T>& b) { return dual<T>(a) + b; }
template <class T> dual<T> operator-(const dual<T>& a, double b) { return a - dual<T>(b); }
template <class T> dual<T> operator-(double a, const dual<T>& b) { return dual<T>(a) - b; }
template <class T> dual<T> operator*(const dual<T>& a, double b) { return {a.val * b, a.dot * b}; }
template <class T> dual<T> operator*(double a, const dual<T>& b) { return {b.val * a, b.dot * a}; }
template <class T> dual<T> operator/(const dual<T>& a, double b) { return {a.val / b, a.dot / b}; }
template <class T> dual<T> operator/(double a, const dual<T>& b) { return dual<T>(a) / b; }

template <class T> dual<T>& operator+=(dual<T>& a, const dual<T>& b) { a = a + b; return a; }
template <class T> dual<T>& operator-=(dual<T>& a, const dual<T>& b) { a = a - b; return a; }
template <class T> dual<T>& operator*=(dual<T>& a, const dual<T>& b) { a = a * b; return a; }

// ---------------------------------------------------------------------------
// Elementary functions (chain rule)
// ---------------------------------------------------------------------------

template <class T>
dual<T> sin(const dual<T>& a) {
    using std::sin; using std::cos;
    return {sin(a.val), cos(a.val) * a.dot};
}

template <class T>
dual<T> cos(const dual<T>& a) {
    using std::sin; using std::cos;
    return {cos(a.val), -sin(a.val) * a.dot};
}

template <class T>
dual<T> sinh(const dual<T>& a) {
    using std::sinh; using std::cosh;
    return {sinh(a.val), cosh(a.val) * a.dot};
}

template <class T>
dual<T> cosh(const dual<T>& a) {
    using std::sinh; using std::cosh;
    return {cosh(a.val), sinh(a.val) * a.dot};
}

template <class T>
dual<T> tanh(const dual<T>& a) {
    using std::tanh;
    T th = tanh(a.val);
    return {th, (1.0 - th * th) * a.dot};
}

template <class T>
dual<T> exp(const dual<T>& a) {
    using std::exp;
    T e = exp(a.val);
    return {e, e * a.dot};
}

template <class T>
dual<T> log(const dual<T>& a) {
    using std::log;
    return {log(a.val), a.dot / a.val};
}

template <class T>
dual<T> sqrt(const dual<T>& a) {
    using std::sqrt;
    T r = sqrt(a.val);
    return {r, a.dot / (2.0 * r)};
}

/// abs uses the a.e. derivative sign(value); the derivative at zero is
/// taken as zero.
template <class T>
dual<T> abs(const dual<T>& a) {
    using std::abs;
    double v = passive_value(a.val);
    double s = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    return {abs(a.val), s * a.dot};
}

/// Power with a constant real exponent: d(u^c) = c u^(c-1) u'.
/// Valid for negative bases when c is an integer, matching std::pow.
template <class T>
dual<T> pow(const dual<T>& a, double c) {
    using std::pow;
    return {pow(a.val, c), c * pow(a.val, c - 1.0) * a.dot};
}

/// General power with a varying exponent, via exp(b ln a); requires a > 0.
template <class T>
dual<T> pow(const dual<T>& a, const dual<T>& b) {
    return exp(b * log(a));
}

} // namespace invsde
