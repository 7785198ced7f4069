#include <catch2/catch_amalgamated.hpp>

#include "invsde/expr.hpp"
#include "invsde/rng.hpp"

#include <cmath>
#include <vector>

using namespace invsde;

namespace {

double eval(const expr& e, double t, std::vector<double> x) {
    return e.evaluate<double>(t, std::span<const double>(x));
}

/// Random parser-canonical ASTs: constants are non-negative (the parser
/// expresses negative literals with a negate node).
expr random_expr(counter_rng& rng, int depth) {
    const int leaf = depth <= 0 ? 3 : static_cast<int>(rng.next_u64() % 10);
    switch (leaf) {
    case 0: return -random_expr(rng, depth - 1);
    case 1:
        return expr::binary(node_kind::add, random_expr(rng, depth - 1),
                            random_expr(rng, depth - 1));
    case 2:
        return expr::binary(node_kind::subtract, random_expr(rng, depth - 1),
                            random_expr(rng, depth - 1));
    case 3: {
        switch (rng.next_u64() % 3) {
        case 0: return expr::constant(std::floor(rng.uniform_range(0.0, 9.0)));
        case 1: return expr::t();
        default: return expr::x(1 + static_cast<int>(rng.next_u64() % 4));
        }
    }
    case 4:
        return expr::binary(node_kind::multiply, random_expr(rng, depth - 1),
                            random_expr(rng, depth - 1));
    case 5:
        return expr::binary(node_kind::divide, random_expr(rng, depth - 1),
                            random_expr(rng, depth - 1));
    case 6: {
        expr ex = expr::constant(1.0 + static_cast<double>(rng.next_u64() % 3));
        if (rng.next_u64() % 3 == 0) ex = -ex;
        return expr::binary(node_kind::power, random_expr(rng, depth - 1), ex);
    }
    case 7:
    case 8: {
        auto f = static_cast<func_kind>(rng.next_u64() % 9);
        return expr::call(f, random_expr(rng, depth - 1));
    }
    default:
        return expr::binary(node_kind::add, random_expr(rng, depth - 1),
                            expr::x(1 + static_cast<int>(rng.next_u64() % 4)));
    }
}

} // namespace

TEST_CASE("tokenizer splits the catalog expressions", "[expr]") {
    auto tokens = tokenize("x1^2 + x2^2 - cosh(x3)^2");
    REQUIRE(tokens.size() == 14);
    CHECK(tokens[12].text == "^");
    CHECK(tokens[13].text == "2");

    auto t2 = tokenize("2*sin(2*t)");
    REQUIRE(t2.size() == 8);
    CHECK(t2[0].kind == token_kind::number);
    CHECK(t2[1].text == "*");
    CHECK(t2[2].text == "sin");
    CHECK(t2[3].kind == token_kind::lparen);
    CHECK(t2[6].text == "t");
    CHECK(t2[7].kind == token_kind::rparen);
}

TEST_CASE("tokenizer reports the offending offset", "[expr]") {
    try {
        tokenize("x1 $ x2");
        FAIL("expected lex_error");
    } catch (const lex_error& e) {
        CHECK(e.offset == 3);
    }
}

TEST_CASE("parser follows the precedence ladder", "[expr]") {
    expr parsed = parse("x2 + x4 - x1*x3");
    expr by_hand = expr::binary(node_kind::subtract,
                                expr::binary(node_kind::add, expr::x(2), expr::x(4)),
                                expr::x(1) * expr::x(3));
    CHECK(parsed == by_hand);

    CHECK(parse("-x1^2") == -expr::binary(node_kind::power, expr::x(1), expr::constant(2.0)));
    CHECK(parse("-x1^2") != expr::binary(node_kind::power, -expr::x(1), expr::constant(2.0)));

    // right association for ^, left for -
    CHECK(parse("x1^x2^x3") ==
          expr::binary(node_kind::power, expr::x(1),
                       expr::binary(node_kind::power, expr::x(2), expr::x(3))));
    CHECK(parse("x1 - x2 - x3") ==
          expr::binary(node_kind::subtract,
                       expr::binary(node_kind::subtract, expr::x(1), expr::x(2)), expr::x(3)));
}

TEST_CASE("parse errors carry an offset", "[expr]") {
    CHECK_THROWS_AS(parse("sin()"), parse_error);
    CHECK_THROWS_AS(parse("x1 +"), parse_error);
    CHECK_THROWS_AS(parse("(x1"), parse_error);
    CHECK_THROWS_AS(parse("foo(x1)"), parse_error);
    CHECK_THROWS_AS(parse("x0"), parse_error);
    CHECK_THROWS_AS(parse("sin x1"), parse_error);
    try {
        parse("sin()");
        FAIL("expected parse_error");
    } catch (const parse_error& e) {
        CHECK(e.offset == 4);
    }
}

TEST_CASE("evaluation matches hand values", "[expr]") {
    CHECK(eval(parse("x1^2 + x2^2 - cosh(x3)^2"), 0.0, {0.0, 1.0, 0.0}) == 0.0);
    CHECK(eval(parse("x1 + x2^2 + cos(2*t)"), 0.0, {1.0, 1.0}) == 3.0);
    CHECK(eval(parse("x2 + x4 - x1*x3"), 0.0, {1.0, 2.0, 3.0, 4.0}) == 3.0);
    CHECK(eval(parse("2*sin(2*t)"), M_PI / 4.0, {}) == Catch::Approx(2.0));
    CHECK(eval(parse("x1^-2"), 0.0, {2.0}) == 0.25);
    CHECK(eval(parse("2^x1"), 0.0, {10.0}) == Catch::Approx(1024.0));
}

TEST_CASE("domain errors name the offending node", "[expr]") {
    CHECK_THROWS_AS(eval(parse("ln(x1)"), 0.0, {0.0}), eval_error);
    CHECK_THROWS_AS(eval(parse("ln(x1)"), 0.0, {-1.0}), eval_error);
    CHECK_THROWS_AS(eval(parse("sqrt(x1)"), 0.0, {-1.0}), eval_error);
    CHECK_THROWS_AS(eval(parse("1/x1"), 0.0, {0.0}), eval_error);
    CHECK_THROWS_AS(eval(parse("x1^-2"), 0.0, {0.0}), eval_error);
    try {
        eval(parse("1 + ln(x1 - x2)"), 0.0, {1.0, 1.0});
        FAIL("expected eval_error");
    } catch (const eval_error& e) {
        CHECK(std::string(e.what()).find("ln(x1 - x2)") != std::string::npos);
    }
}

TEST_CASE("binding rejects out-of-range variables", "[expr]") {
    CHECK_NOTHROW(parse("x2 + x4 - x1*x3").bind(4));
    CHECK_THROWS_AS(parse("x2 + x4 - x1*x3").bind(3), dimension_error);
    std::vector<double> x = {1.0, 2.0};
    CHECK_THROWS_AS(parse("x3").evaluate<double>(0.0, std::span<const double>(x)),
                    dimension_error);
}

TEST_CASE("free variables are the syntactic set", "[expr]") {
    var_set a = parse("x1 + x2^2 + cos(2*t)").free_variables();
    CHECK(a.uses_t);
    CHECK(a.indices == std::vector<int>{1, 2});

    var_set b = parse("x2 + x4 - x1*x3").free_variables();
    CHECK_FALSE(b.uses_t);
    CHECK(b.indices == std::vector<int>{1, 2, 3, 4});

    var_set c = parse("3.5").free_variables();
    CHECK_FALSE(c.uses_t);
    CHECK(c.indices.empty());
}

TEST_CASE("print/parse round trip is structural", "[expr][property]") {
    counter_rng rng = counter_rng::substream(2024, 1);
    for (int i = 0; i < 500; ++i) {
        expr e = random_expr(rng, 4);
        std::string text = pretty_print(e);
        INFO("printed: " << text);
        expr back = parse(text);
        CHECK(back == e);
    }
}

TEST_CASE("dual evaluation with zero seeds matches plain values bitwise", "[expr][property]") {
    counter_rng rng = counter_rng::substream(2024, 2);
    int checked = 0;
    for (int i = 0; i < 300; ++i) {
        expr e = random_expr(rng, 3);
        std::vector<double> x = {rng.uniform_range(-2, 2), rng.uniform_range(-2, 2),
                                 rng.uniform_range(-2, 2), rng.uniform_range(-2, 2)};
        double t = rng.uniform_range(-1, 1);
        double plain;
        try {
            plain = e.evaluate<double>(t, std::span<const double>(x));
        } catch (const eval_error&) {
            continue;
        }
        if (!std::isfinite(plain)) continue;
        std::vector<dual<double>> xd;
        for (double v : x) xd.emplace_back(v, 0.0);
        double via_dual =
            e.evaluate<dual<double>>(dual<double>(t), std::span<const dual<double>>(xd)).val;
        CHECK(via_dual == plain);
        ++checked;
    }
    CHECK(checked > 100);
}

TEST_CASE("perturbing a free variable changes the value somewhere", "[expr][property]") {
    counter_rng rng = counter_rng::substream(2024, 3);
    const char* sources[] = {
        "x1^2 + x2^2 - cosh(x3)^2",
        "x1 + x2^2 + cos(2*t)",
        "x2 + x4 - x1*x3",
        "(x1^2 + x2^2 + x3^2)/2",
    };
    for (const char* src : sources) {
        expr e = parse(src);
        var_set vars = e.free_variables();
        for (int index : vars.indices) {
            bool moved = false;
            for (int p = 0; p < 100 && !moved; ++p) {
                std::vector<double> x = {rng.uniform_range(-2, 2), rng.uniform_range(-2, 2),
                                         rng.uniform_range(-2, 2), rng.uniform_range(-2, 2)};
                double t = rng.uniform_range(0, 1);
                double base = e.evaluate<double>(t, std::span<const double>(x));
                x[index - 1] += 0.25;
                double shifted = e.evaluate<double>(t, std::span<const double>(x));
                moved = shifted != base;
            }
            INFO(src << " variable x" << index);
            CHECK(moved);
        }
    }
}

TEST_CASE("constants survive the round trip bitwise", "[expr]") {
    for (double v : {0.1, 1.0 / 3.0, 2.0, 1e-15, 12345.6789, 4.046e-5}) {
        expr e = expr::constant(v);
        CHECK(parse(pretty_print(e)).constant_value() == v);
    }
}
