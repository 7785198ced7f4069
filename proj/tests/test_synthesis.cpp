#include <catch2/catch_amalgamated.hpp>

#include "invsde/symbolic.hpp"
#include "invsde/synthesis.hpp"
#include "test_support.hpp"

#include <cmath>
#include <vector>

using namespace invsde;

namespace {

// Example systems used throughout: catenoid (n=3), moving parabola (n=2),
// sphere (n=3), iterated-integral generator (n=4, s=2).

std::pair<invariant_spec, coefficient_choice> catenoid() {
    invariant_spec spec = invariant_spec::make(3, parse("x1^2 + x2^2 - cosh(x3)^2"), "general");
    coefficient_choice choice(3, 1);
    choice.set(1, 0, parse("1/5"));
    choice.set(1, 1, parse("1/3"));
    choice.set(2, 1, parse("1/10"));
    return {spec, choice};
}

std::pair<invariant_spec, coefficient_choice> parabola() {
    invariant_spec spec = invariant_spec::make(2, parse("x1 + x2^2 + cos(2*t)"), "general");
    coefficient_choice choice(2, 1);
    choice.set(1, 0, parse("1/10"));
    choice.set(1, 1, parse("1/5"));
    return {spec, choice};
}

std::pair<invariant_spec, coefficient_choice> sphere() {
    invariant_spec spec = invariant_spec::make(3, parse("(x1^2 + x2^2 + x3^2)/2"), "general");
    coefficient_choice choice(3, 1);
    choice.set(1, 1, parse("1"));
    choice.set(2, 1, parse("-1"));
    return {spec, choice};
}

std::pair<invariant_spec, coefficient_choice> iterated() {
    invariant_spec spec = invariant_spec::make(4, parse("x2 + x4 - x1*x3"), "general");
    coefficient_choice choice(4, 2);
    choice.set(1, 1, parse("1"));
    choice.set(3, 2, parse("1"));
    return {spec, choice};
}

double sinh2(double x) { return std::sinh(2.0 * x); }

} // namespace

TEST_CASE("diffusion columns match the catenoid display", "[synthesis]") {
    auto [spec, choice] = catenoid();
    counter_rng rng = counter_rng::substream(21, 0);
    for (int p = 0; p < 100; ++p) {
        auto x = testsupport::random_point(rng, 3, -1.5, 1.5);
        auto cols = build_diffusion(spec, choice, 0.0, x);
        REQUIRE(cols.size() == 1);
        CHECK(cols[0][0] == Catch::Approx(2.0 * x[1] / 3.0).margin(1e-14));
        CHECK(cols[0][1] ==
              Catch::Approx(-2.0 * x[0] / 3.0 - sinh2(x[2]) / 10.0).margin(1e-14));
        CHECK(cols[0][2] == Catch::Approx(-x[1] / 5.0).margin(1e-14));
    }
}

TEST_CASE("zero coefficients give a deterministic system", "[synthesis]") {
    auto [spec, choice] = catenoid();
    coefficient_choice zero(3, 1);
    auto cols = build_diffusion(spec, zero, 0.0, std::vector<double>{0.3, 1.1, -0.2});
    for (double v : cols[0]) CHECK(v == 0.0);
}

TEST_CASE("iterated-integral generator picks chain vectors", "[synthesis]") {
    auto [spec, choice] = iterated();
    counter_rng rng = counter_rng::substream(21, 1);
    for (int p = 0; p < 50; ++p) {
        auto x = testsupport::random_point(rng, 4, -2.0, 2.0);
        auto cols = build_diffusion(spec, choice, 0.0, x);
        REQUIRE(cols.size() == 2);
        CHECK(cols[0][0] == 1.0);
        CHECK(cols[0][1] == x[2]);
        CHECK(cols[0][2] == 0.0);
        CHECK(cols[0][3] == 0.0);
        CHECK(cols[1][0] == 0.0);
        CHECK(cols[1][1] == 0.0);
        CHECK(cols[1][2] == 1.0);
        CHECK(cols[1][3] == x[0]);
    }
}

TEST_CASE("stratonovich drift matches the displayed coefficients", "[synthesis]") {
    counter_rng rng = counter_rng::substream(21, 2);

    auto [pspec, pchoice] = parabola();
    for (int p = 0; p < 100; ++p) {
        double t = rng.uniform_range(0.0, 6.28);
        auto x = testsupport::random_point(rng, 2, -2.0, 2.0);
        auto a = build_stratonovich_drift(pspec, pchoice, t, x);
        CHECK(a[0] == Catch::Approx(2.0 * std::sin(2.0 * t) + x[1] / 5.0).margin(1e-14));
        CHECK(a[1] == Catch::Approx(-0.1).margin(1e-15));
    }

    auto [sspec, schoice] = sphere();
    auto a0 = build_stratonovich_drift(sspec, schoice, 0.0,
                                       std::vector<double>{0.4, -0.8, 1.2});
    CHECK(a0 == std::vector<double>{0.0, 0.0, 0.0});

    auto [cspec, cchoice] = catenoid();
    for (int p = 0; p < 100; ++p) {
        auto x = testsupport::random_point(rng, 3, -1.5, 1.5);
        auto a = build_stratonovich_drift(cspec, cchoice, 0.0, x);
        CHECK(a[0] == Catch::Approx(2.0 * x[1] / 5.0).margin(1e-14));
        CHECK(a[1] == Catch::Approx(-2.0 * x[0] / 5.0).margin(1e-14));
        CHECK(a[2] == 0.0);
    }
}

TEST_CASE("drift correction matches the closed forms", "[synthesis]") {
    counter_rng rng = counter_rng::substream(21, 3);

    auto [sspec, schoice] = sphere();
    sde_system sph = synthesize_system(sspec, schoice);
    for (int p = 0; p < 100; ++p) {
        auto x = testsupport::random_point(rng, 3, -2.0, 2.0);
        auto s = sigma_correction(sph, 0.0, x);
        CHECK(s[0] == Catch::Approx((-x[0] - x[2]) / 2.0).margin(1e-12));
        CHECK(s[1] == Catch::Approx(-x[1]).margin(1e-12));
        CHECK(s[2] == Catch::Approx((-x[0] - x[2]) / 2.0).margin(1e-12));
    }

    auto [cspec, cchoice] = catenoid();
    sde_system cat = synthesize_system(cspec, cchoice);
    for (int p = 0; p < 100; ++p) {
        auto x = testsupport::random_point(rng, 3, -1.5, 1.5);
        auto s = sigma_correction(cat, 0.0, x);
        double rel = 1e-10 * std::max(1.0, std::abs(s[0]));
        CHECK(std::abs(s[0] - (-2.0 * x[0] / 9.0 - sinh2(x[2]) / 30.0)) <= rel);
        // second component by direct differentiation (the AD route is
        // authoritative): x2 (9 cosh 2x3 - 100) / 450
        double expected1 = x[1] * (9.0 * std::cosh(2.0 * x[2]) - 100.0) / 450.0;
        CHECK(std::abs(s[1] - expected1) <= 1e-10 * std::max(1.0, std::abs(expected1)));
        double expected2 = x[0] / 15.0 + sinh2(x[2]) / 100.0;
        CHECK(std::abs(s[2] - expected2) <= 1e-10 * std::max(1.0, std::abs(expected2)));
    }

    auto [pspec, pchoice] = parabola();
    sde_system par = synthesize_system(pspec, pchoice);
    for (int p = 0; p < 20; ++p) {
        auto x = testsupport::random_point(rng, 2, -2.0, 2.0);
        auto s = sigma_correction(par, rng.uniform_range(0.0, 6.0), x);
        CHECK(s[0] == Catch::Approx(-1.0 / 25.0).margin(1e-14));
        CHECK(s[1] == Catch::Approx(0.0).margin(1e-15));
    }

    coefficient_choice silent(3, 1); // all u = 0
    sde_system quiet = synthesize_system(sspec, silent);
    auto s = sigma_correction(quiet, 0.0, std::vector<double>{0.5, 0.5, 0.5});
    CHECK(s == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("ito drift adds the correction", "[synthesis]") {
    counter_rng rng = counter_rng::substream(21, 4);
    auto [pspec, pchoice] = parabola();
    for (int p = 0; p < 50; ++p) {
        double t = rng.uniform_range(0.0, 6.28);
        auto x = testsupport::random_point(rng, 2, -2.0, 2.0);
        auto f = build_ito_drift(pspec, pchoice, t, x);
        CHECK(f[0] ==
              Catch::Approx(2.0 * std::sin(2.0 * t) + x[1] / 5.0 - 1.0 / 25.0).margin(1e-13));
        CHECK(f[1] == Catch::Approx(-0.1).margin(1e-14));
    }

    auto [sspec, schoice] = sphere();
    sde_system sph = synthesize_system(sspec, schoice);
    for (int p = 0; p < 50; ++p) {
        auto x = testsupport::random_point(rng, 3, -2.0, 2.0);
        auto f = build_ito_drift(sspec, schoice, 0.0, x);
        auto s = sigma_correction(sph, 0.0, x);
        for (int i = 0; i < 3; ++i) CHECK(f[i] == Catch::Approx(s[i]).margin(1e-13));
    }

    // sigma = 0 implies f = a
    coefficient_choice drift_only(3, 1);
    drift_only.set(1, 0, parse("1/5"));
    auto f = build_ito_drift(sspec, drift_only, 0.0, std::vector<double>{0.4, 0.6, -0.2});
    auto a = build_stratonovich_drift(sspec, drift_only, 0.0,
                                      std::vector<double>{0.4, 0.6, -0.2});
    CHECK(f == a);
}

TEST_CASE("interpretation conversion is an involution", "[synthesis][property]") {
    counter_rng rng = counter_rng::substream(21, 5);
    auto check_roundtrip = [&](const sde_system& sys, double lo, double hi, double tmax) {
        sde_system there = convert_interpretation(
            sys, sys.interp == interpretation::ito ? interpretation::stratonovich
                                                   : interpretation::ito);
        sde_system back = convert_interpretation(there, sys.interp);
        std::vector<double> d0(sys.n), d1(sys.n);
        for (int p = 0; p < 200; ++p) {
            auto x = testsupport::random_point(rng, sys.n, lo, hi);
            double t = rng.uniform_range(0.0, tmax);
            sys.drift->eval(t, x, std::span<double>(d0));
            back.drift->eval(t, x, std::span<double>(d1));
            for (int i = 0; i < sys.n; ++i) CHECK(std::abs(d0[i] - d1[i]) <= 1e-12);
        }
    };
    auto [cspec, cchoice] = catenoid();
    check_roundtrip(synthesize_system(cspec, cchoice), -1.5, 1.5, 1.0);
    auto [pspec, pchoice] = parabola();
    check_roundtrip(synthesize_system(pspec, pchoice), -2.0, 2.0, 6.28);
    auto [ispec, ichoice] = iterated();
    check_roundtrip(synthesize_system(ispec, ichoice, interpretation::ito), -2.0, 2.0, 1.0);

    // converting between interpretations leaves a zero-diffusion drift alone
    auto [sspec, schoice] = sphere();
    coefficient_choice drift_only(3, 1);
    drift_only.set(1, 0, parse("1/5"));
    sde_system ode = synthesize_system(sspec, drift_only);
    sde_system as_ito = convert_interpretation(ode, interpretation::ito);
    std::vector<double> a(3), f(3);
    std::vector<double> x = {0.4, 0.6, -0.2};
    ode.drift->eval(0.0, std::span<const double>(x), std::span<double>(a));
    as_ito.drift->eval(0.0, std::span<const double>(x), std::span<double>(f));
    CHECK(a == f);
}

TEST_CASE("milstein drift forms agree between interpretations", "[synthesis]") {
    // Example 1 lists both f and a; converting the Ito synthesis back to
    // Stratonovich must reproduce a.
    auto [cspec, cchoice] = catenoid();
    sde_system ito = synthesize_system(cspec, cchoice, interpretation::ito);
    sde_system strat = convert_interpretation(ito, interpretation::stratonovich);
    counter_rng rng = counter_rng::substream(21, 6);
    std::vector<double> a(3);
    for (int p = 0; p < 100; ++p) {
        auto x = testsupport::random_point(rng, 3, -1.5, 1.5);
        strat.drift->eval(0.0, std::span<const double>(x), std::span<double>(a));
        CHECK(a[0] == Catch::Approx(2.0 * x[1] / 5.0).margin(1e-12));
        CHECK(a[1] == Catch::Approx(-2.0 * x[0] / 5.0).margin(1e-12));
        CHECK(a[2] == Catch::Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("invariance residuals validate synthesized systems", "[synthesis][property]") {
    counter_rng rng = counter_rng::substream(21, 7);
    auto sample = [&](int n, double lo, double hi, double tmax, int count) {
        std::vector<sample_point> pts;
        for (int p = 0; p < count; ++p) {
            sample_point sp;
            sp.t = rng.uniform_range(0.0, tmax);
            sp.x = testsupport::random_point(rng, n, lo, hi);
            pts.push_back(std::move(sp));
        }
        return pts;
    };

    auto [cspec, cchoice] = catenoid();
    sde_system cat = synthesize_system(cspec, cchoice);
    auto report = invariance_residuals(cat, cspec.M, sample(3, -1.5, 1.5, 1.0, 1000));
    CHECK(report.max_residual <= 1e-10);

    auto [pspec, pchoice] = parabola();
    sde_system par = synthesize_system(pspec, pchoice);
    report = invariance_residuals(par, pspec.M, sample(2, -2.0, 2.0, 6.28, 1000));
    CHECK(report.max_residual <= 1e-10);

    auto [ispec, ichoice] = iterated();
    sde_system gen = synthesize_system(ispec, ichoice, interpretation::ito);
    report = invariance_residuals(gen, ispec.M, sample(4, -2.0, 2.0, 1.0, 1000));
    CHECK(report.max_residual <= 1e-12);
}

TEST_CASE("residuals flag a broken system", "[synthesis]") {
    // catenoid sigma with +1 on the first component
    std::vector<expr> drift = {parse("2*x2/5"), parse("-2*x1/5"), parse("0")};
    std::vector<std::vector<expr>> diffusion = {{parse("2*x2/3 + 1"),
                                                 parse("-2*x1/3 - sinh(2*x3)/10"),
                                                 parse("-x2/5")}};
    sde_system broken = make_explicit_system(3, interpretation::stratonovich,
                                             std::move(drift), std::move(diffusion));
    std::vector<sample_point> pts = {{0.0, {0.5, 1.0, 0.2}}, {0.0, {-0.4, 0.9, -0.1}}};
    auto report =
        invariance_residuals(broken, parse("x1^2 + x2^2 - cosh(x3)^2"), pts);
    CHECK(report.max_diffusion >= 0.1);
}

TEST_CASE("orthogonality and drift conditions at random points", "[synthesis][property]") {
    counter_rng rng = counter_rng::substream(21, 8);
    auto [pspec, pchoice] = parabola();
    sde_system par = synthesize_system(pspec, pchoice);
    std::vector<double> col(2), a(2), G(2);
    for (int p = 0; p < 500; ++p) {
        double t = rng.uniform_range(0.0, 6.28);
        auto x = testsupport::random_point(rng, 2, -2.0, 2.0);
        gradient_result g = gradient(pspec.M, t, x);
        par.diffusion[0]->eval(t, x, std::span<double>(col));
        double r = std::abs(linalg::dot(col, g.G));
        CHECK(r <= 1e-10 * std::max(1e-12, linalg::norm(col) * linalg::norm(g.G)));
        par.drift->eval(t, x, std::span<double>(a));
        double gt = std::sqrt(g.g0 * g.g0 + linalg::dot(g.G, g.G));
        CHECK(std::abs(g.g0 + linalg::dot(a, g.G)) <=
              1e-10 * (1.0 + linalg::norm(a)) * gt);
    }
}

TEST_CASE("coefficients are linear in u", "[synthesis]") {
    auto [pspec, pchoice] = parabola();
    coefficient_choice doubled(2, 1);
    doubled.set(1, 0, parse("2*(1/10)"));
    doubled.set(1, 1, parse("2*(1/5)"));
    counter_rng rng = counter_rng::substream(21, 9);
    for (int p = 0; p < 100; ++p) {
        double t = rng.uniform_range(0.0, 6.28);
        auto x = testsupport::random_point(rng, 2, -2.0, 2.0);
        auto sigma1 = build_diffusion(pspec, pchoice, t, x)[0];
        auto sigma2 = build_diffusion(pspec, doubled, t, x)[0];
        for (int i = 0; i < 2; ++i) CHECK(sigma2[i] == 2.0 * sigma1[i]);
        auto a1 = build_stratonovich_drift(pspec, pchoice, t, x);
        auto a2 = build_stratonovich_drift(pspec, doubled, t, x);
        const double n0 = 2.0 * std::sin(2.0 * t); // drift offset, not scaled by u
        CHECK(a2[0] - n0 == Catch::Approx(2.0 * (a1[0] - n0)).margin(1e-14));
        CHECK(a2[1] == Catch::Approx(2.0 * a1[1]).margin(1e-15));
    }
}

TEST_CASE("special basis produces the quaternion-style columns", "[synthesis]") {
    invariant_spec spec =
        invariant_spec::make(4, parse("(x1^2 + x2^2 + x3^2 + x4^2)/2"), "special");
    CHECK(spec.kind == basis_kind::special4);
    coefficient_choice choice(4, 1);
    choice.set(1, 1, parse("1"));
    auto cols = build_diffusion(spec, choice, 0.0, std::vector<double>{0.9, -0.3, 0.2, 0.1});
    // N1 = (-g2, g1, g4, -g3) with G = x
    CHECK(cols[0] == std::vector<double>{0.3, 0.9, 0.1, -0.2});

    // auto kind resolution
    CHECK(invariant_spec::make(4, parse("x2 + x4 - x1*x3")).kind == basis_kind::special4);
    CHECK(invariant_spec::make(3, parse("(x1^2 + x2^2 + x3^2)/2")).kind ==
          basis_kind::projected);
    CHECK(invariant_spec::make(9, parse("x1 + x9")).kind == basis_kind::general);
    CHECK_THROWS_AS(invariant_spec::make(3, parse("x1"), "special"), config_error);
    CHECK_THROWS_AS(invariant_spec::make(2, parse("1")), config_error);
}

TEST_CASE("hand-entered systems verify but do not synthesize", "[synthesis]") {
    std::vector<expr> drift = {parse("0"), parse("0"), parse("0")};
    std::vector<std::vector<expr>> diffusion = {
        {parse("x2"), parse("-x1 - x3"), parse("x2")}};
    sde_system sys = make_explicit_system(3, interpretation::stratonovich, std::move(drift),
                                          std::move(diffusion),
                                          parse("(x1^2 + x2^2 + x3^2)/2"));
    CHECK(sys.provenance == nullptr);
    counter_rng rng = counter_rng::substream(21, 10);
    std::vector<sample_point> pts;
    for (int p = 0; p < 200; ++p)
        pts.push_back({0.0, testsupport::random_point(rng, 3, -2.0, 2.0)});
    auto report = invariance_residuals(sys, *sys.invariant, pts);
    CHECK(report.max_residual <= 1e-12);
    CHECK_THROWS_AS(coefficient_expressions(sys), config_error);
}

TEST_CASE("regenerated coefficient text evaluates like the fields", "[synthesis][symbolic]") {
    counter_rng rng = counter_rng::substream(21, 11);
    auto check_text = [&](const sde_system& sys, double lo, double hi, double tmax) {
        coefficient_text text = coefficient_expressions(sys);
        std::vector<double> field_val(sys.n);
        for (int p = 0; p < 100; ++p) {
            double t = rng.uniform_range(0.0, tmax);
            auto x = testsupport::random_point(rng, sys.n, lo, hi);
            std::span<const double> xs(x);
            for (int l = 0; l < sys.s; ++l) {
                sys.diffusion[l]->eval(t, xs, std::span<double>(field_val));
                for (int i = 0; i < sys.n; ++i) {
                    double printed = text.sigma[l][i].evaluate<double>(t, xs);
                    CHECK(std::abs(printed - field_val[i]) <=
                          1e-12 * std::max(1.0, std::abs(field_val[i])));
                }
            }
            sde_system strat = sys.interp == interpretation::stratonovich
                                   ? sys
                                   : convert_interpretation(sys, interpretation::stratonovich);
            strat.drift->eval(t, xs, std::span<double>(field_val));
            for (int i = 0; i < sys.n; ++i) {
                double printed = text.stratonovich_drift[i].evaluate<double>(t, xs);
                CHECK(std::abs(printed - field_val[i]) <=
                      1e-12 * std::max(1.0, std::abs(field_val[i])));
            }
            auto sigma = sigma_correction(sys, t, x);
            for (int i = 0; i < sys.n; ++i) {
                double printed = text.sigma_correction[i].evaluate<double>(t, xs);
                CHECK(std::abs(printed - sigma[i]) <=
                      1e-12 * std::max(1.0, std::abs(sigma[i])));
                double printed_f = text.ito_drift[i].evaluate<double>(t, xs);
                double a_i = text.stratonovich_drift[i].evaluate<double>(t, xs);
                CHECK(std::abs(printed_f - (a_i + sigma[i])) <=
                      1e-12 * std::max(1.0, std::abs(printed_f)));
            }
        }
    };
    auto [cspec, cchoice] = catenoid();
    check_text(synthesize_system(cspec, cchoice), -1.5, 1.5, 1.0);
    auto [pspec, pchoice] = parabola();
    check_text(synthesize_system(pspec, pchoice), -2.0, 2.0, 6.28);
    auto [ispec, ichoice] = iterated();
    check_text(synthesize_system(ispec, ichoice, interpretation::ito), -2.0, 2.0, 1.0);
}

TEST_CASE("regenerated catenoid text matches the printed system", "[synthesis][symbolic]") {
    auto [spec, choice] = catenoid();
    sde_system sys = synthesize_system(spec, choice);
    coefficient_text text = coefficient_expressions(sys);
    counter_rng rng = counter_rng::substream(21, 12);
    for (int p = 0; p < 100; ++p) {
        auto x = testsupport::random_point(rng, 3, -1.5, 1.5);
        std::span<const double> xs(x);
        double s0 = text.sigma[0][0].evaluate<double>(0.0, xs);
        double s1 = text.sigma[0][1].evaluate<double>(0.0, xs);
        double s2 = text.sigma[0][2].evaluate<double>(0.0, xs);
        CHECK(s0 == Catch::Approx(2.0 * x[1] / 3.0).margin(1e-13));
        CHECK(s1 == Catch::Approx(-2.0 * x[0] / 3.0 - sinh2(x[2]) / 10.0).margin(1e-13));
        CHECK(s2 == Catch::Approx(-x[1] / 5.0).margin(1e-13));
    }
}
