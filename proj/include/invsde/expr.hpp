#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "invsde/dual.hpp"
#include "invsde/errors.hpp"

namespace invsde {

// ---------------------------------------------------------------------------
// Tokens
// ---------------------------------------------------------------------------

enum class token_kind : std::uint8_t {
    number,
    identifier,
    op,      // one of + - * / ^
    lparen,
    rparen,
    comma,
};

struct token {
    token_kind kind;
    std::string text;
    std::size_t offset = 0;
    double value = 0.0; // number tokens only
};

/// Split source text into tokens. Whitespace separates tokens and is
/// otherwise ignored. Throws lex_error with the byte offset of the first
/// character outside the grammar.
inline std::vector<token> tokenize(std::string_view source) {
    std::vector<token> out;
    std::size_t i = 0;
    const std::size_t len = source.size();
    auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
    auto is_alpha = [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
    };
    while (i < len) {
        char c = source[i];
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            ++i;
            continue;
        }
        std::size_t start = i;
        if (is_digit(c)) {
            while (i < len && is_digit(source[i])) ++i;
            if (i < len && source[i] == '.') {
                ++i;
                if (i >= len || !is_digit(source[i]))
                    throw lex_error(i, "lexical error at offset " + std::to_string(i) +
                                           ": expected digit after decimal point");
                while (i < len && is_digit(source[i])) ++i;
            }
            if (i < len && (source[i] == 'e' || source[i] == 'E')) {
                std::size_t mark = i;
                ++i;
                if (i < len && (source[i] == '+' || source[i] == '-')) ++i;
                if (i >= len || !is_digit(source[i])) {
                    i = mark; // not an exponent, leave 'e' for the next token
                } else {
                    while (i < len && is_digit(source[i])) ++i;
                }
            }
            std::string text(source.substr(start, i - start));
            double value = 0.0;
            auto res = std::from_chars(text.data(), text.data() + text.size(), value);
            if (res.ec != std::errc())
                throw lex_error(start, "lexical error at offset " + std::to_string(start) +
                                           ": bad number '" + text + "'");
            out.push_back({token_kind::number, std::move(text), start, value});
        } else if (is_alpha(c)) {
            while (i < len && (is_alpha(source[i]) || is_digit(source[i]))) ++i;
            out.push_back({token_kind::identifier,
                           std::string(source.substr(start, i - start)), start, 0.0});
        } else if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^') {
            out.push_back({token_kind::op, std::string(1, c), start, 0.0});
            ++i;
        } else if (c == '(') {
            out.push_back({token_kind::lparen, "(", start, 0.0});
            ++i;
        } else if (c == ')') {
            out.push_back({token_kind::rparen, ")", start, 0.0});
            ++i;
        } else if (c == ',') {
            out.push_back({token_kind::comma, ",", start, 0.0});
            ++i;
        } else {
            throw lex_error(start, "lexical error at offset " + std::to_string(start) +
                                       ": unexpected character '" + std::string(1, c) + "'");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// AST
// ---------------------------------------------------------------------------

enum class node_kind : std::uint8_t {
    constant,
    time_var,
    state_var,
    negate,
    add,
    subtract,
    multiply,
    divide,
    power,
    call,
};

enum class func_kind : std::uint8_t { sin, cos, sinh, cosh, tanh, exp, ln, sqrt, abs };

inline constexpr const char* func_names[] = {"sin", "cos",  "sinh", "cosh", "tanh",
                                             "exp", "ln", "sqrt", "abs"};

namespace detail {

struct expr_node {
    node_kind kind = node_kind::constant;
    func_kind func = func_kind::sin;
    double constant = 0.0;
    int index = 0;              // state_var, 1-based
    int small_exponent = 0;     // power nodes with constant integer exponent, |k| <= 8
    bool has_small_exponent = false;
    std::uint32_t a = 0;        // first child
    std::uint32_t b = 0;        // second child
};

inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace detail

struct var_set {
    bool uses_t = false;
    std::vector<int> indices; // sorted, 1-based

    bool contains(int i) const {
        for (int j : indices)
            if (j == i) return true;
        return false;
    }
};

/// Parsed scalar expression in t and x1..xn. Immutable after construction;
/// evaluation is generic over the scalar type so the same tree runs on plain
/// doubles, dual numbers, and symbolic scalars.
class expr {
public:
    expr() { root_ = add_node({}); } // constant 0

    // -- builders ------------------------------------------------------

    static expr constant(double v) {
        expr e;
        e.nodes_[e.root_].constant = v;
        return e;
    }

    static expr t() {
        expr e;
        e.nodes_[e.root_].kind = node_kind::time_var;
        return e;
    }

    static expr x(int index) {
        if (index < 1) throw dimension_error("state variable index must be >= 1");
        expr e;
        e.nodes_[e.root_].kind = node_kind::state_var;
        e.nodes_[e.root_].index = index;
        return e;
    }

    static expr unary(node_kind kind, expr a) {
        expr e = std::move(a);
        detail::expr_node n;
        n.kind = kind;
        n.a = e.root_;
        e.root_ = e.add_node(n);
        return e;
    }

    static expr binary(node_kind kind, expr a, const expr& b) {
        expr e = std::move(a);
        std::uint32_t rb = e.graft(b);
        detail::expr_node n;
        n.kind = kind;
        n.a = e.root_;
        n.b = rb;
        if (kind == node_kind::power) {
            double c = 0.0;
            if (e.constant_exponent(rb, c) && c == std::floor(c) && std::abs(c) <= 8.0) {
                n.small_exponent = static_cast<int>(c);
                n.has_small_exponent = true;
            }
        }
        e.root_ = e.add_node(n);
        return e;
    }

    static expr call(func_kind f, expr a) {
        expr e = std::move(a);
        detail::expr_node n;
        n.kind = node_kind::call;
        n.func = f;
        n.a = e.root_;
        e.root_ = e.add_node(n);
        return e;
    }

    friend expr operator-(expr a) { return unary(node_kind::negate, std::move(a)); }
    friend expr operator+(expr a, const expr& b) { return binary(node_kind::add, std::move(a), b); }
    friend expr operator-(expr a, const expr& b) { return binary(node_kind::subtract, std::move(a), b); }
    friend expr operator*(expr a, const expr& b) { return binary(node_kind::multiply, std::move(a), b); }
    friend expr operator/(expr a, const expr& b) { return binary(node_kind::divide, std::move(a), b); }

    // -- inspection ----------------------------------------------------

    node_kind root_kind() const { return nodes_[root_].kind; }

    bool is_constant() const { return nodes_[root_].kind == node_kind::constant; }

    double constant_value() const { return nodes_[root_].constant; }

    /// Largest state-variable index appearing in the tree (0 if none).
    int max_state_index() const {
        int m = 0;
        for (const auto& n : nodes_)
            if (n.kind == node_kind::state_var && n.index > m) m = n.index;
        return m;
    }

    /// Check that every variable fits a system of dimension n.
    void bind(int n) const {
        int m = max_state_index();
        if (m > n)
            throw dimension_error("expression uses x" + std::to_string(m) +
                                  " but the system dimension is " + std::to_string(n));
    }

    /// Exact set of variables syntactically present.
    var_set free_variables() const {
        var_set vs;
        std::vector<bool> seen;
        for (const auto& n : nodes_) {
            if (n.kind == node_kind::time_var) vs.uses_t = true;
            if (n.kind == node_kind::state_var) {
                if (static_cast<std::size_t>(n.index) >= seen.size())
                    seen.resize(n.index + 1, false);
                seen[n.index] = true;
            }
        }
        for (std::size_t i = 1; i < seen.size(); ++i)
            if (seen[i]) vs.indices.push_back(static_cast<int>(i));
        return vs;
    }

    // -- evaluation ----------------------------------------------------

    template <class S>
    S evaluate(const S& t, std::span<const S> x) const {
        return eval_node<S>(root_, t, x);
    }

    // -- printing ------------------------------------------------------

    std::string str() const { return print_node(root_, 0); }

    // -- structural equality (source offsets ignored) -------------------

    friend bool operator==(const expr& a, const expr& b) {
        return a.equal_nodes(a.root_, b, b.root_);
    }
    friend bool operator!=(const expr& a, const expr& b) { return !(a == b); }

private:
    friend expr parse(std::string_view);

    std::vector<detail::expr_node> nodes_;
    std::uint32_t root_ = 0;

    std::uint32_t add_node(detail::expr_node n) {
        nodes_.push_back(n);
        return static_cast<std::uint32_t>(nodes_.size() - 1);
    }

    /// Constant exponent value at node i, looking through a leading negate.
    bool constant_exponent(std::uint32_t i, double& out) const {
        const auto& n = nodes_[i];
        if (n.kind == node_kind::constant) {
            out = n.constant;
            return true;
        }
        if (n.kind == node_kind::negate && nodes_[n.a].kind == node_kind::constant) {
            out = -nodes_[n.a].constant;
            return true;
        }
        return false;
    }

    /// Append another tree's nodes to this pool; returns the new root index.
    std::uint32_t graft(const expr& other) {
        std::uint32_t offset = static_cast<std::uint32_t>(nodes_.size());
        for (auto n : other.nodes_) {
            if (n.kind == node_kind::negate || n.kind == node_kind::call) {
                n.a += offset;
            } else if (n.kind == node_kind::add || n.kind == node_kind::subtract ||
                       n.kind == node_kind::multiply || n.kind == node_kind::divide ||
                       n.kind == node_kind::power) {
                n.a += offset;
                n.b += offset;
            }
            nodes_.push_back(n);
        }
        return other.root_ + offset;
    }

    bool equal_nodes(std::uint32_t ia, const expr& other, std::uint32_t ib) const {
        const auto& na = nodes_[ia];
        const auto& nb = other.nodes_[ib];
        if (na.kind != nb.kind) return false;
        switch (na.kind) {
        case node_kind::constant: return na.constant == nb.constant;
        case node_kind::time_var: return true;
        case node_kind::state_var: return na.index == nb.index;
        case node_kind::negate: return equal_nodes(na.a, other, nb.a);
        case node_kind::call:
            return na.func == nb.func && equal_nodes(na.a, other, nb.a);
        default:
            return equal_nodes(na.a, other, nb.a) && equal_nodes(na.b, other, nb.b);
        }
    }

    [[noreturn]] void domain_fail(std::uint32_t i, const std::string& what) const {
        throw eval_error("domain error: " + what + " in '" + print_node(i, 0) + "'");
    }

    template <class S>
    S eval_node(std::uint32_t i, const S& t, std::span<const S>& x) const {
        const auto& n = nodes_[i];
        switch (n.kind) {
        case node_kind::constant: return S(n.constant);
        case node_kind::time_var: return t;
        case node_kind::state_var:
            if (static_cast<std::size_t>(n.index) > x.size())
                throw dimension_error("expression uses x" + std::to_string(n.index) +
                                      " but only " + std::to_string(x.size()) +
                                      " state values were supplied");
            return x[n.index - 1];
        case node_kind::negate: return -eval_node<S>(n.a, t, x);
        case node_kind::add: return eval_node<S>(n.a, t, x) + eval_node<S>(n.b, t, x);
        case node_kind::subtract: return eval_node<S>(n.a, t, x) - eval_node<S>(n.b, t, x);
        case node_kind::multiply: return eval_node<S>(n.a, t, x) * eval_node<S>(n.b, t, x);
        case node_kind::divide: {
            S num = eval_node<S>(n.a, t, x);
            S den = eval_node<S>(n.b, t, x);
            if constexpr (has_passive_value<S>) {
                if (passive_value(den) == 0.0) domain_fail(i, "division by zero");
            }
            return num / den;
        }
        case node_kind::power: return eval_power<S>(i, t, x);
        case node_kind::call: return eval_call<S>(i, t, x);
        }
        throw error("corrupt expression node");
    }

    template <class S>
    S eval_power(std::uint32_t i, const S& t, std::span<const S>& x) const {
        const auto& n = nodes_[i];
        S base = eval_node<S>(n.a, t, x);
        // Integer exponents up to 8 run as repeated multiplication so that
        // derivatives stay exact for non-positive bases.
        if (n.has_small_exponent) {
            int k = n.small_exponent;
            if (k == 0) return S(1.0);
            int m = k < 0 ? -k : k;
            S acc = base;
            for (int p = 1; p < m; ++p) acc = acc * base;
            if (k < 0) {
                if constexpr (has_passive_value<S>) {
                    if (passive_value(acc) == 0.0) domain_fail(i, "division by zero");
                }
                return S(1.0) / acc;
            }
            return acc;
        }
        double c = 0.0;
        if (constant_exponent(n.b, c)) {
            using std::pow;
            return pow(base, c);
        }
        S ex = eval_node<S>(n.b, t, x);
        if constexpr (has_passive_value<S>) {
            if (passive_value(base) <= 0.0)
                domain_fail(i, "power with non-constant exponent needs positive base");
        }
        using std::exp; using std::log;
        return exp(ex * log(base));
    }

    template <class S>
    S eval_call(std::uint32_t i, const S& t, std::span<const S>& x) const {
        const auto& n = nodes_[i];
        S a = eval_node<S>(n.a, t, x);
        using std::sin; using std::cos; using std::sinh; using std::cosh;
        using std::tanh; using std::exp; using std::log; using std::sqrt; using std::abs;
        switch (n.func) {
        case func_kind::sin: return sin(a);
        case func_kind::cos: return cos(a);
        case func_kind::sinh: return sinh(a);
        case func_kind::cosh: return cosh(a);
        case func_kind::tanh: return tanh(a);
        case func_kind::exp: return exp(a);
        case func_kind::ln:
            if constexpr (has_passive_value<S>) {
                if (passive_value(a) <= 0.0) domain_fail(i, "ln of non-positive value");
            }
            return log(a);
        case func_kind::sqrt:
            if constexpr (has_passive_value<S>) {
                if (passive_value(a) < 0.0) domain_fail(i, "sqrt of negative value");
            }
            return sqrt(a);
        case func_kind::abs: return abs(a);
        }
        throw error("corrupt expression node");
    }

    // Precedence levels: add/sub 1, mul/div 2, unary minus 3, power 4, atom 5.
    static int precedence(node_kind k) {
        switch (k) {
        case node_kind::add:
        case node_kind::subtract: return 1;
        case node_kind::multiply:
        case node_kind::divide: return 2;
        case node_kind::negate: return 3;
        case node_kind::power: return 4;
        default: return 5;
        }
    }

    std::string print_node(std::uint32_t i, int) const {
        const auto& n = nodes_[i];
        auto child = [&](std::uint32_t c, bool parens) {
            std::string s = print_node(c, 0);
            return parens ? "(" + s + ")" : s;
        };
        int prec = precedence(n.kind);
        switch (n.kind) {
        case node_kind::constant: return detail::format_double(n.constant);
        case node_kind::time_var: return "t";
        case node_kind::state_var: return "x" + std::to_string(n.index);
        case node_kind::negate:
            return "-" + child(n.a, precedence(nodes_[n.a].kind) < prec);
        case node_kind::add:
        case node_kind::subtract: {
            const char* op = n.kind == node_kind::add ? " + " : " - ";
            return child(n.a, precedence(nodes_[n.a].kind) < prec) + op +
                   child(n.b, precedence(nodes_[n.b].kind) <= prec);
        }
        case node_kind::multiply:
        case node_kind::divide: {
            const char* op = n.kind == node_kind::multiply ? "*" : "/";
            return child(n.a, precedence(nodes_[n.a].kind) < prec) + op +
                   child(n.b, precedence(nodes_[n.b].kind) <= prec);
        }
        case node_kind::power:
            // exponents parse as unary expressions, so only +-*/ need parens
            return child(n.a, precedence(nodes_[n.a].kind) <= prec) + "^" +
                   child(n.b, precedence(nodes_[n.b].kind) < 3);
        case node_kind::call:
            return std::string(func_names[static_cast<int>(n.func)]) + "(" +
                   print_node(n.a, 0) + ")";
        }
        return {};
    }
};

/// Print an expression using the grammar accepted by parse().
inline std::string pretty_print(const expr& e) { return e.str(); }

// ---------------------------------------------------------------------------
// Parser: recursive descent with the precedence ladder
//   ^  >  unary -  >  * /  >  + -
// Left association for + - * /, right association for ^.
// ---------------------------------------------------------------------------

namespace detail {

class parser {
public:
    parser(std::vector<token> tokens, std::size_t source_len)
        : tokens_(std::move(tokens)), end_offset_(source_len) {}

    expr run() {
        expr e = parse_sum();
        if (pos_ < tokens_.size()) fail("end of input");
        return e;
    }

private:
    std::vector<token> tokens_;
    std::size_t pos_ = 0;
    std::size_t end_offset_;

    const token* peek() const { return pos_ < tokens_.size() ? &tokens_[pos_] : nullptr; }

    bool at_op(char c) const {
        const token* t = peek();
        return t && t->kind == token_kind::op && t->text[0] == c;
    }

    [[noreturn]] void fail(const std::string& expected) const {
        std::size_t off = pos_ < tokens_.size() ? tokens_[pos_].offset : end_offset_;
        std::string got = pos_ < tokens_.size() ? "'" + tokens_[pos_].text + "'" : "end of input";
        throw parse_error(off, "parse error at offset " + std::to_string(off) + ": expected " +
                                   expected + ", got " + got);
    }

    expr parse_sum() {
        expr e = parse_term();
        while (at_op('+') || at_op('-')) {
            bool plus = tokens_[pos_].text[0] == '+';
            ++pos_;
            expr rhs = parse_term();
            e = expr::binary(plus ? node_kind::add : node_kind::subtract, std::move(e), rhs);
        }
        return e;
    }

    expr parse_term() {
        expr e = parse_unary();
        while (at_op('*') || at_op('/')) {
            bool mul = tokens_[pos_].text[0] == '*';
            ++pos_;
            expr rhs = parse_unary();
            e = expr::binary(mul ? node_kind::multiply : node_kind::divide, std::move(e), rhs);
        }
        return e;
    }

    expr parse_unary() {
        if (at_op('-')) {
            ++pos_;
            return -parse_unary();
        }
        return parse_power();
    }

    expr parse_power() {
        expr base = parse_atom();
        if (at_op('^')) {
            ++pos_;
            expr ex = parse_unary(); // right associative, exponent may be signed
            return expr::binary(node_kind::power, std::move(base), ex);
        }
        return base;
    }

    expr parse_atom() {
        const token* t = peek();
        if (!t) fail("number, identifier, '(' or '-'");
        if (t->kind == token_kind::number) {
            ++pos_;
            return expr::constant(t->value);
        }
        if (t->kind == token_kind::lparen) {
            ++pos_;
            expr e = parse_sum();
            if (!peek() || peek()->kind != token_kind::rparen) fail("')'");
            ++pos_;
            return e;
        }
        if (t->kind == token_kind::identifier) return parse_identifier();
        fail("number, identifier, '(' or '-'");
    }

    expr parse_identifier() {
        const token& t = tokens_[pos_];
        const std::string& name = t.text;
        for (int f = 0; f < 9; ++f) {
            if (name == func_names[f]) {
                ++pos_;
                if (!peek() || peek()->kind != token_kind::lparen) fail("'(' after function name");
                ++pos_;
                if (peek() && peek()->kind == token_kind::rparen)
                    fail("expression as function argument");
                expr arg = parse_sum();
                if (!peek() || peek()->kind != token_kind::rparen) fail("')'");
                ++pos_;
                return expr::call(static_cast<func_kind>(f), std::move(arg));
            }
        }
        if (name == "t") {
            ++pos_;
            return expr::t();
        }
        if (name.size() >= 2 && name[0] == 'x') {
            bool digits = true;
            for (std::size_t i = 1; i < name.size(); ++i)
                if (name[i] < '0' || name[i] > '9') digits = false;
            if (digits && name[1] != '0') {
                int index = 0;
                std::from_chars(name.data() + 1, name.data() + name.size(), index);
                ++pos_;
                return expr::x(index);
            }
        }
        throw parse_error(t.offset, "parse error at offset " + std::to_string(t.offset) +
                                        ": unknown identifier '" + name + "'");
    }
};

} // namespace detail

/// Parse expression text into an AST.
inline expr parse(std::string_view source) {
    return detail::parser(tokenize(source), source.size()).run();
}

} // namespace invsde
