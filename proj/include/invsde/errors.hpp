#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace invsde {

/// Base class for all library errors.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Character outside the expression grammar.
class lex_error : public error {
public:
    lex_error(std::size_t offset, const std::string& what)
        : error(what), offset(offset) {}
    std::size_t offset;
};

/// Token stream does not match the grammar.
class parse_error : public error {
public:
    parse_error(std::size_t offset, const std::string& what)
        : error(what), offset(offset) {}
    std::size_t offset;
};

/// Evaluation left the domain of a function (ln of non-positive,
/// division by zero, sqrt of negative).
class eval_error : public error {
public:
    using error::error;
};

/// State vector or expression dimensions do not match the declared n.
class dimension_error : public error {
public:
    using error::error;
};

/// A division pivot required by a basis construction is (near) zero.
class degenerate_pivot_error : public error {
public:
    using error::error;
};

/// |G| is below tolerance where a construction requires |G| != 0.
class zero_gradient_error : public error {
public:
    using error::error;
};

/// Basis vectors are not linearly independent at the point.
class singular_basis_error : public error {
public:
    using error::error;
};

/// A vector could not be represented in the basis within tolerance.
class residual_error : public error {
public:
    residual_error(double residual, const std::string& what)
        : error(what), residual(residual) {}
    double residual;
};

/// Linear system solve hit a zero pivot.
class singular_matrix_error : public error {
public:
    using error::error;
};

/// Invalid configuration, flag combination, or definition file.
class config_error : public error {
public:
    using error::error;
};

/// A trajectory produced a non-finite state and was abandoned.
class trajectory_abort : public error {
public:
    trajectory_abort(int step, const std::string& what)
        : error(what), step(step) {}
    int step;
};

} // namespace invsde
