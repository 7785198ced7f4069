#pragma once

#include <cmath>
#include <cstring>
#include <span>
#include <vector>

#include "invsde/errors.hpp"

namespace invsde::linalg {

/// Determinant by LU with partial pivoting. `a` is n x n row-major and is
/// destroyed in the process.
inline double lu_determinant_inplace(std::span<double> a, int n) {
    double det = 1.0;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        double best = std::abs(a[col * n + col]);
        for (int r = col + 1; r < n; ++r) {
            double v = std::abs(a[r * n + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best == 0.0) return 0.0;
        if (pivot != col) {
            for (int c = 0; c < n; ++c) std::swap(a[pivot * n + c], a[col * n + c]);
            det = -det;
        }
        det *= a[col * n + col];
        for (int r = col + 1; r < n; ++r) {
            double f = a[r * n + col] / a[col * n + col];
            for (int c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
        }
    }
    return det;
}

inline double lu_determinant(std::span<const double> a, int n) {
    std::vector<double> copy(a.begin(), a.end());
    return lu_determinant_inplace(copy, n);
}

/// Solve A x = b in place by Gaussian elimination with partial pivoting;
/// the solution replaces b. Throws singular_matrix_error on a zero pivot.
inline void solve_inplace(std::span<double> a, std::span<double> b, int n) {
    double scale = 0.0;
    for (int i = 0; i < n * n; ++i) scale = std::max(scale, std::abs(a[i]));
    if (scale == 0.0) throw singular_matrix_error("singular matrix: all entries zero");
    const double tol = scale * 1e-14 * n;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        double best = std::abs(a[col * n + col]);
        for (int r = col + 1; r < n; ++r) {
            double v = std::abs(a[r * n + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best <= tol)
            throw singular_matrix_error("singular matrix: pivot " + std::to_string(best) +
                                        " at column " + std::to_string(col));
        if (pivot != col) {
            for (int c = 0; c < n; ++c) std::swap(a[pivot * n + c], a[col * n + c]);
            std::swap(b[pivot], b[col]);
        }
        for (int r = col + 1; r < n; ++r) {
            double f = a[r * n + col] / a[col * n + col];
            a[r * n + col] = 0.0;
            for (int c = col + 1; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < n; ++c) s -= a[r * n + c] * b[c];
        b[r] = s / a[r * n + r];
    }
}

struct least_squares_result {
    std::vector<double> coefficients;
    double residual_norm = 0.0;
    double min_pivot = 0.0;
};

/// Least squares min |A c - v| for a tall n x k matrix (columns are the
/// basis vectors), via Householder QR. min_pivot reports the smallest |R_jj|
/// so callers can detect rank deficiency.
inline least_squares_result qr_least_squares(std::span<const double> a_rowmajor, int n, int k,
                                             std::span<const double> v) {
    std::vector<double> a(a_rowmajor.begin(), a_rowmajor.end());
    std::vector<double> b(v.begin(), v.end());
    least_squares_result out;
    out.min_pivot = std::numeric_limits<double>::infinity();
    for (int col = 0; col < k; ++col) {
        double norm = 0.0;
        for (int r = col; r < n; ++r) norm += a[r * k + col] * a[r * k + col];
        norm = std::sqrt(norm);
        double head = a[col * k + col];
        double alpha = head >= 0.0 ? -norm : norm;
        out.min_pivot = std::min(out.min_pivot, std::abs(alpha));
        if (norm == 0.0) continue;
        // Householder vector u = x - alpha e1, applied as I - 2 u u^T / |u|^2
        std::vector<double> u(n - col, 0.0);
        u[0] = head - alpha;
        for (int r = col + 1; r < n; ++r) u[r - col] = a[r * k + col];
        double unorm2 = 0.0;
        for (double ui : u) unorm2 += ui * ui;
        if (unorm2 == 0.0) continue;
        for (int c = col; c < k; ++c) {
            double dot = 0.0;
            for (int r = col; r < n; ++r) dot += u[r - col] * a[r * k + c];
            double f = 2.0 * dot / unorm2;
            for (int r = col; r < n; ++r) a[r * k + c] -= f * u[r - col];
        }
        double dot = 0.0;
        for (int r = col; r < n; ++r) dot += u[r - col] * b[r];
        double f = 2.0 * dot / unorm2;
        for (int r = col; r < n; ++r) b[r] -= f * u[r - col];
    }
    out.coefficients.assign(k, 0.0);
    for (int r = k - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < k; ++c) s -= a[r * k + c] * out.coefficients[c];
        double d = a[r * k + r];
        out.coefficients[r] = d != 0.0 ? s / d : 0.0;
    }
    double res = 0.0;
    for (int r = k; r < n; ++r) res += b[r] * b[r];
    out.residual_norm = std::sqrt(res);
    return out;
}

inline double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace invsde::linalg
