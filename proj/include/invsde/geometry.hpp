#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "invsde/autodiff.hpp"
#include "invsde/errors.hpp"
#include "invsde/linalg.hpp"

namespace invsde {

enum class basis_kind : std::uint8_t {
    general,       // chain vectors N_j = g_{j+1} E_j - g_j E_{j+1}
    time_extended, // chain vectors plus the drift offset N0 = (-g0/g1, 0, ..., 0)
    special2,      // pair-permutation basis, never degenerate for |G| != 0
    special4,
    special8,
    projected,     // truncation of the 4- or 8-dimensional special basis
    supplemented,  // chain over the dependent block plus unit vectors
};

/// Tangent vectors orthogonal to the gradient at one point, plus the
/// metadata needed to reason about degeneracy.
struct basis_set {
    basis_kind kind = basis_kind::general;
    int n = 0;
    std::vector<std::vector<double>> vectors; // components in the caller's variable order
    std::vector<double> n0;                   // time_extended only (zero vector when g0 = 0)
    std::vector<int> degenerate;              // 1-based gradient indices with |g_i| <= tol
    std::vector<int> permutation;             // supplemented: permuted position -> original index
};

/// Scale-relative threshold used everywhere a component is tested against
/// zero: tol = 1e-8 * max(1, |G|).
inline double degeneracy_tol(double gradient_norm) {
    return 1e-8 * std::max(1.0, gradient_norm);
}

namespace detail {

template <class S>
using vec_buf = std::array<S, max_dim>;

template <class S>
using basis_buf = std::array<vec_buf<S>, max_dim - 1>;

template <class S>
void chain_vectors(std::span<const S> G, basis_buf<S>& out) {
    const int n = static_cast<int>(G.size());
    for (int j = 0; j < n - 1; ++j) {
        for (int i = 0; i < n; ++i) out[j][i] = S(0.0);
        out[j][j] = G[j + 1];
        out[j][j + 1] = -G[j];
    }
}

// Pair-permutation patterns. Row r of pattern k encodes
// N_{r+1}[i] = sign[i] * g[index[i]] with 1-based indices.
struct special_pattern {
    int index[8];
    int sign[8];
};

inline constexpr special_pattern special2_rows[1] = {
    {{2, 1, 0, 0, 0, 0, 0, 0}, {-1, 1, 0, 0, 0, 0, 0, 0}},
};

inline constexpr special_pattern special4_rows[3] = {
    {{2, 1, 4, 3, 0, 0, 0, 0}, {-1, 1, 1, -1, 0, 0, 0, 0}},
    {{3, 4, 1, 2, 0, 0, 0, 0}, {-1, -1, 1, 1, 0, 0, 0, 0}},
    {{4, 3, 2, 1, 0, 0, 0, 0}, {-1, 1, -1, 1, 0, 0, 0, 0}},
};

inline constexpr special_pattern special8_rows[7] = {
    {{2, 1, 4, 3, 6, 5, 8, 7}, {-1, 1, 1, -1, 1, -1, -1, 1}},
    {{3, 4, 1, 2, 7, 8, 5, 6}, {-1, -1, 1, 1, 1, 1, -1, -1}},
    {{4, 3, 2, 1, 8, 7, 6, 5}, {-1, 1, -1, 1, 1, -1, 1, -1}},
    {{5, 6, 7, 8, 1, 2, 3, 4}, {-1, -1, -1, -1, 1, 1, 1, 1}},
    {{6, 5, 8, 7, 2, 1, 4, 3}, {-1, 1, -1, 1, -1, 1, -1, 1}},
    {{7, 8, 5, 6, 3, 4, 1, 2}, {-1, 1, 1, -1, -1, 1, 1, -1}},
    {{8, 7, 6, 5, 4, 3, 2, 1}, {-1, -1, 1, 1, -1, -1, 1, 1}},
};

inline std::span<const special_pattern> special_rows(int n) {
    switch (n) {
    case 2: return {special2_rows, 1};
    case 4: return {special4_rows, 3};
    case 8: return {special8_rows, 7};
    default:
        throw dimension_error("pair-permutation basis exists only for n in {2,4,8}, got n=" +
                              std::to_string(n));
    }
}

template <class S>
void special_vectors(std::span<const S> G, basis_buf<S>& out) {
    const int n = static_cast<int>(G.size());
    auto rows = special_rows(n);
    for (std::size_t j = 0; j < rows.size(); ++j)
        for (int i = 0; i < n; ++i) {
            S g = G[rows[j].index[i] - 1];
            out[j][i] = rows[j].sign[i] < 0 ? -g : g;
        }
}

/// Candidates for n in {3,5,6,7}: embed G in the next pair-permutation
/// dimension with trailing zeros, build that basis, drop the padding
/// components. Returns the candidate count (3 for n=3, else 7).
template <class S>
int projected_candidates(std::span<const S> G, basis_buf<S>& out) {
    const int n = static_cast<int>(G.size());
    if (n != 3 && n != 5 && n != 6 && n != 7)
        throw dimension_error("projected basis exists only for n in {3,5,6,7}, got n=" +
                              std::to_string(n));
    const int full = n == 3 ? 4 : 8;
    vec_buf<S> padded;
    for (int i = 0; i < full; ++i) padded[i] = i < n ? G[i] : S(0.0);
    basis_buf<S> full_vectors;
    special_vectors<S>(std::span<const S>(padded.data(), full), full_vectors);
    const int count = full - 1;
    for (int j = 0; j < count; ++j)
        for (int i = 0; i < n; ++i) out[j][i] = full_vectors[j][i];
    return count;
}

/// Greedy pivoted Gram-Schmidt selection of a maximal independent subset,
/// ties broken by lowest candidate index. Pivot threshold 1e-8 |G|.
inline std::vector<int> select_independent(const basis_buf<double>& cand, int count, int n,
                                           double gradient_norm) {
    std::vector<int> chosen;
    std::vector<std::array<double, max_dim>> ortho;
    const double threshold = 1e-8 * gradient_norm;
    for (int j = 0; j < count; ++j) {
        std::array<double, max_dim> r{};
        for (int i = 0; i < n; ++i) r[i] = cand[j][i];
        for (const auto& q : ortho) {
            double num = 0.0, den = 0.0;
            for (int i = 0; i < n; ++i) {
                num += r[i] * q[i];
                den += q[i] * q[i];
            }
            double f = num / den;
            for (int i = 0; i < n; ++i) r[i] -= f * q[i];
        }
        double rn = 0.0;
        for (int i = 0; i < n; ++i) rn += r[i] * r[i];
        if (std::sqrt(rn) > threshold) {
            chosen.push_back(j);
            ortho.push_back(r);
        }
    }
    return chosen;
}

/// The chain basis tolerates identically-zero g1 and gn as long as the
/// interior components stay nonzero, so the exact both-ends pattern needs
/// no supplementation.
inline bool chain_suffices(const std::vector<bool>& zero_mask) {
    const std::size_t n = zero_mask.size();
    std::size_t count = 0;
    for (bool z : zero_mask)
        if (z) ++count;
    if (count == 0) return true;
    return count == 2 && zero_mask[0] && zero_mask[n - 1];
}

/// Stable permutation that moves masked (identically zero) components to
/// the back: result[p] = original 0-based index at permuted position p.
inline std::vector<int> trailing_zero_permutation(const std::vector<bool>& zero_mask) {
    std::vector<int> perm;
    for (std::size_t i = 0; i < zero_mask.size(); ++i)
        if (!zero_mask[i]) perm.push_back(static_cast<int>(i));
    for (std::size_t i = 0; i < zero_mask.size(); ++i)
        if (zero_mask[i]) perm.push_back(static_cast<int>(i));
    return perm;
}

/// Chain vectors over the leading non-zero block plus unit vectors for the
/// masked components, emitted in the caller's original variable order.
template <class S>
void supplemented_vectors(std::span<const S> G, const std::vector<int>& perm, int block,
                          basis_buf<S>& out) {
    const int n = static_cast<int>(G.size());
    for (int j = 0; j < n - 1; ++j)
        for (int i = 0; i < n; ++i) out[j][i] = S(0.0);
    for (int j = 0; j + 1 < block; ++j) {
        out[j][perm[j]] = G[perm[j + 1]];
        out[j][perm[j + 1]] = -G[perm[j]];
    }
    for (int j = block; j < n; ++j) out[block - 1 + (j - block)][perm[j]] = S(1.0);
}

template <class S>
S span_norm_squared(std::span<const S> v) {
    S s = S(0.0);
    for (const S& x : v) s = s + x * x;
    return s;
}

} // namespace detail

/// General chain basis N_j = g_{j+1} E_j - g_j E_{j+1}, j = 1..n-1.
/// Degeneracy lists the interior gradient indices 2..n-1 with |g_i| <= tol.
inline basis_set general_basis(std::span<const double> G) {
    const int n = static_cast<int>(G.size());
    if (n < 2) throw dimension_error("chain basis needs n >= 2");
    if (n > max_dim) throw dimension_error("dimension exceeds supported maximum");
    basis_set out;
    out.kind = basis_kind::general;
    out.n = n;
    detail::basis_buf<double> buf;
    detail::chain_vectors<double>(G, buf);
    out.vectors.resize(n - 1);
    for (int j = 0; j < n - 1; ++j) out.vectors[j].assign(buf[j].begin(), buf[j].begin() + n);
    const double tol = degeneracy_tol(linalg::norm(G));
    for (int i = 2; i <= n - 1; ++i)
        if (std::abs(G[i - 1]) <= tol) out.degenerate.push_back(i);
    return out;
}

/// Chain basis together with N0 = (-g0/g1, 0, ..., 0), which shifts the
/// admissible drift when M depends on t. Degeneracy covers g1..g_{n-1}.
/// Throws degenerate_pivot_error when g0 != 0 and |g1| <= tol.
inline basis_set time_extended_basis(double g0, std::span<const double> G) {
    basis_set out = general_basis(G);
    out.kind = basis_kind::time_extended;
    const int n = out.n;
    const double tol = degeneracy_tol(linalg::norm(G));
    out.degenerate.clear();
    for (int i = 1; i <= n - 1; ++i)
        if (std::abs(G[i - 1]) <= tol) out.degenerate.push_back(i);
    out.n0.assign(n, 0.0);
    if (g0 != 0.0) {
        if (std::abs(G[0]) <= tol)
            throw degenerate_pivot_error("time-extended basis needs g1 != 0 to form N0 "
                                         "(|g1| = " + std::to_string(std::abs(G[0])) + ")");
        out.n0[0] = -g0 / G[0];
    }
    return out;
}

/// Pair-permutation basis for n in {2,4,8}: pairwise orthogonal vectors of
/// norm |G|, never degenerate while |G| != 0.
inline basis_set special_basis(std::span<const double> G) {
    const int n = static_cast<int>(G.size());
    const double gnorm = linalg::norm(G);
    if (gnorm <= degeneracy_tol(gnorm))
        throw zero_gradient_error("pair-permutation basis needs |G| != 0");
    basis_set out;
    out.kind = n == 2 ? basis_kind::special2 : n == 4 ? basis_kind::special4 : basis_kind::special8;
    out.n = n;
    detail::basis_buf<double> buf;
    detail::special_vectors<double>(G, buf);
    out.vectors.resize(n - 1);
    for (int j = 0; j < n - 1; ++j) out.vectors[j].assign(buf[j].begin(), buf[j].begin() + n);
    return out;
}

/// Projection of the 4- or 8-dimensional pair-permutation basis for
/// n in {3,5,6,7}, pruned to a maximal independent subset (n-1 vectors)
/// by greedy pivoted selection.
inline basis_set projected_special_basis(std::span<const double> G) {
    const int n = static_cast<int>(G.size());
    const double gnorm = linalg::norm(G);
    if (gnorm <= degeneracy_tol(gnorm))
        throw zero_gradient_error("projected basis needs |G| != 0");
    detail::basis_buf<double> cand;
    const int count = detail::projected_candidates<double>(G, cand);
    std::vector<int> chosen = detail::select_independent(cand, count, n, gnorm);
    basis_set out;
    out.kind = basis_kind::projected;
    out.n = n;
    for (int j : chosen) {
        out.vectors.emplace_back(cand[j].begin(), cand[j].begin() + n);
    }
    return out;
}

/// Remark-2 construction for first integrals with identically zero gradient
/// components: chain vectors over the dependent block plus unit vectors for
/// each masked component. Vectors are reported in the caller's original
/// variable order; the applied reordering is stored in `permutation`.
inline basis_set supplement_basis(std::span<const double> G, const std::vector<bool>& zero_mask) {
    const int n = static_cast<int>(G.size());
    if (static_cast<int>(zero_mask.size()) != n)
        throw dimension_error("zero mask length must equal n");
    int block = 0;
    for (int i = 0; i < n; ++i)
        if (!zero_mask[i]) ++block;
    if (block == 0)
        throw dimension_error("first integral does not depend on any state variable");
    if (detail::chain_suffices(zero_mask)) return general_basis(G);
    basis_set out;
    out.kind = basis_kind::supplemented;
    out.n = n;
    out.permutation = detail::trailing_zero_permutation(zero_mask);
    detail::basis_buf<double> buf;
    detail::supplemented_vectors<double>(G, out.permutation, block, buf);
    out.vectors.resize(n - 1);
    for (int j = 0; j < n - 1; ++j) out.vectors[j].assign(buf[j].begin(), buf[j].begin() + n);
    const double tol = degeneracy_tol(linalg::norm(G));
    for (int p = 1; p + 1 < block; ++p) // interior of the dependent block
        if (std::abs(G[out.permutation[p]]) <= tol)
            out.degenerate.push_back(out.permutation[p] + 1);
    return out;
}

/// pi_n = g_2 ... g_{n-1} (1 for n = 2).
inline double interior_product(std::span<const double> G) {
    double p = 1.0;
    for (std::size_t i = 1; i + 1 < G.size(); ++i) p *= G[i];
    return p;
}

/// Closed-form determinant of the matrix [G, N_1, ..., N_{n-1}] (or of the
/// time-extended matrix including N0). May legitimately return 0 when a
/// hypothesis fails.
inline double closed_form_determinant(basis_kind kind, double g0, std::span<const double> G) {
    const int n = static_cast<int>(G.size());
    const double g2 = linalg::dot(G, G);
    switch (kind) {
    case basis_kind::general:
        return ((n - 1) % 2 == 0 ? 1.0 : -1.0) * g2 * interior_product(G);
    case basis_kind::time_extended:
        return (n % 2 == 0 ? 1.0 : -1.0) * (g0 * g0 + g2) * interior_product(G);
    case basis_kind::special2:
    case basis_kind::special4:
    case basis_kind::special8: {
        double d = 1.0;
        for (int i = 0; i < n; ++i) d *= std::sqrt(g2);
        return d;
    }
    default:
        throw config_error("no closed-form determinant for this basis kind");
    }
}

/// Expansion coefficients of v over the basis vectors, by Householder QR.
/// Throws singular_basis_error when a pivot falls below tolerance and
/// residual_error when v is not representable within 1e-9 |v|.
inline std::vector<double> coordinates_in_basis(std::span<const double> v,
                                                const basis_set& basis) {
    const int n = basis.n;
    const int k = static_cast<int>(basis.vectors.size());
    if (static_cast<int>(v.size()) != n)
        throw dimension_error("vector length does not match basis dimension");
    std::vector<double> a(static_cast<std::size_t>(n) * k, 0.0);
    double colscale = 0.0;
    for (int j = 0; j < k; ++j)
        for (int i = 0; i < n; ++i) {
            a[i * k + j] = basis.vectors[j][i];
            colscale = std::max(colscale, std::abs(basis.vectors[j][i]));
        }
    auto ls = linalg::qr_least_squares(a, n, k, v);
    if (ls.min_pivot <= 1e-8 * std::max(1.0, colscale))
        throw singular_basis_error("basis vectors are linearly dependent at this point "
                                   "(pivot " + std::to_string(ls.min_pivot) + ")");
    const double vnorm = linalg::norm(v);
    if (ls.residual_norm > 1e-9 * vnorm)
        throw residual_error(ls.residual_norm,
                             "vector lies outside the basis span (residual " +
                                 std::to_string(ls.residual_norm) + ")");
    return ls.coefficients;
}

} // namespace invsde
