#include <catch2/catch_amalgamated.hpp>

#include "invsde/harness.hpp"
#include "invsde/catalog.hpp"

#include <cmath>

using namespace invsde;

TEST_CASE("catalog lists the five built-in systems", "[harness]") {
    const auto& entries = catalog();
    REQUIRE(entries.size() == 5);
    CHECK(entries[0].name == "catenoid");
    CHECK(entries[1].name == "dynamic-parabola");
    CHECK(entries[2].name == "sphere");
    CHECK(entries[3].name == "quaternion");
    CHECK(entries[4].name == "iterated-integrals");

    CHECK_THROWS_AS(catalog_entry_by_name("catenoids"), config_error);
    try {
        catalog_entry_by_name("nope");
        FAIL("expected config_error");
    } catch (const config_error& e) {
        CHECK(std::string(e.what()).find("catenoid") != std::string::npos);
    }
}

TEST_CASE("catalog entries carry their defining data", "[harness]") {
    const catalog_entry& cat = catalog_entry_by_name("catenoid");
    CHECK(cat.initial_states.size() == 2);
    CHECK(cat.initial_states[0] == std::vector<double>{0.0, 1.0, 0.0});
    CHECK(cat.initial_states[1] == std::vector<double>{1.0, 0.0, 0.0});
    CHECK(cat.T == 10.0);

    const catalog_entry& gen = catalog_entry_by_name("iterated-integrals");
    CHECK(gen.system.s == 2);
    CHECK(gen.system.interp == interpretation::ito);
    std::vector<double> x = {0.4, -0.2, 1.1, 0.7}, out(4);
    gen.system.drift->eval(0.0, std::span<const double>(x), std::span<double>(out));
    for (double v : out) CHECK(v == 0.0); // f = a = 0, Sigma = 0
    auto sigma = sigma_correction(gen.system, 0.0, x);
    for (double v : sigma) CHECK(v == 0.0);

    const catalog_entry& quat = catalog_entry_by_name("quaternion");
    double norm2 = 0.0;
    for (double v : quat.initial_states[0]) norm2 += v * v;
    CHECK(norm2 == 1.0); // unit quaternion start
    CHECK(quat.system.s == 3);

    const catalog_entry& sph = catalog_entry_by_name("sphere");
    CHECK(sph.system.sphere_analytic);
    CHECK(sph.description.find("S = [") != std::string::npos);
}

TEST_CASE("analytic sphere has no invariant drift", "[harness]") {
    const catalog_entry& sph = catalog_entry_by_name("sphere");
    error_report r = invariant_error(sph.system, integrator_kind::analytic_sphere,
                                     sph.initial_states[0], sph.t0, sph.T, 0.01, 50, 99);
    CHECK(r.epsilon <= 1e-12);
    CHECK(r.aborts == 0);
}

TEST_CASE("invariant error is bit-reproducible across runs and thread counts",
          "[harness]") {
    const catalog_entry& cat = catalog_entry_by_name("catenoid");
    auto run = [&](int threads) {
        return invariant_error(cat.system, integrator_kind::milstein, cat.initial_states[0],
                               cat.t0, 1.0, 0.01, 64, 2024, threads, cat.name);
    };
    error_report a = run(1);
    error_report b = run(1);
    CHECK(a == b);
    error_report c = run(4);
    CHECK(a.epsilon == c.epsilon);
    CHECK(a.sample_std == c.sample_std);
}

TEST_CASE("invariant drift shrinks with the step size", "[harness][slowish]") {
    const catalog_entry& cat = catalog_entry_by_name("catenoid");
    std::vector<double> ladder = {1e-2, 1e-3};
    convergence_table table =
        convergence_study(cat.system, integrator_kind::milstein, cat.initial_states[0],
                          cat.t0, cat.T, ladder, 200, 7, 0, cat.name);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[1].epsilon < table.rows[0].epsilon);
    CHECK(table.orders[0] > 0.5);
    CHECK(table.orders[0] < 1.5);

    const catalog_entry& quat = catalog_entry_by_name("quaternion");
    convergence_table qt =
        convergence_study(quat.system, integrator_kind::euler, quat.initial_states[0],
                          quat.t0, quat.T, ladder, 100, 7, 0, quat.name);
    CHECK(qt.rows[1].epsilon < qt.rows[0].epsilon);
}

TEST_CASE("convergence study validates its ladder", "[harness]") {
    const catalog_entry& cat = catalog_entry_by_name("catenoid");
    std::vector<double> single = {1e-2};
    CHECK_THROWS_AS(convergence_study(cat.system, integrator_kind::milstein,
                                      cat.initial_states[0], cat.t0, cat.T, single, 10, 1),
                    config_error);
    std::vector<double> increasing = {1e-3, 1e-2};
    CHECK_THROWS_AS(convergence_study(cat.system, integrator_kind::milstein,
                                      cat.initial_states[0], cat.t0, cat.T, increasing, 10, 1),
                    config_error);
}

TEST_CASE("reports round-trip through JSON and CSV", "[harness]") {
    const catalog_entry& sph = catalog_entry_by_name("sphere");
    error_report r = invariant_error(sph.system, integrator_kind::milstein,
                                     sph.initial_states[0], sph.t0, 1.0, 0.01, 32, 5, 0,
                                     sph.name);
    error_report back = parse_report_json(export_json(r));
    CHECK(back == r);

    std::string csv = export_csv(r);
    CHECK(csv.rfind("h,R,epsilon,stderr,aborts\n", 0) == 0);
    auto rows = parse_reports_csv(csv);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].h == r.h);
    CHECK(rows[0].trajectories == r.trajectories);
    CHECK(rows[0].epsilon == r.epsilon);
    CHECK(rows[0].std_error == r.std_error);
    CHECK(rows[0].aborts == r.aborts);

    auto j = nlohmann::json::parse(export_json(r));
    CHECK(j.contains("seed"));

    std::vector<double> ladder = {1e-1, 1e-2};
    convergence_table table =
        convergence_study(sph.system, integrator_kind::milstein, sph.initial_states[0],
                          sph.t0, 1.0, ladder, 32, 5, 0, sph.name);
    convergence_table back_table = parse_table_json(export_json(table));
    REQUIRE(back_table.rows.size() == 2);
    CHECK(back_table.rows[0] == table.rows[0]);
    CHECK(back_table.rows[1] == table.rows[1]);
    CHECK(back_table.orders == table.orders);
    auto csv_rows = parse_reports_csv(export_csv(table));
    CHECK(csv_rows.size() == 2);
}

TEST_CASE("trajectory aborts above one percent fail the report", "[harness]") {
    std::vector<expr> drift = {parse("x1^8"), parse("0")};
    std::vector<std::vector<expr>> diffusion = {{parse("0"), parse("0")}};
    sde_system explosive =
        make_explicit_system(2, interpretation::ito, std::move(drift), std::move(diffusion),
                             parse("x1 + x2"));
    std::vector<double> x0 = {10.0, 0.0};
    CHECK_THROWS_AS(
        invariant_error(explosive, integrator_kind::euler, x0, 0.0, 10.0, 1.0, 5, 1),
        invsde::error);
}

TEST_CASE("hand-entered systems with a declared invariant can convert", "[harness]") {
    const catalog_entry& quat = catalog_entry_by_name("quaternion");
    // euler needs the Ito drift; the declared invariant authorizes conversion
    error_report r = invariant_error(quat.system, integrator_kind::euler,
                                     quat.initial_states[0], 0.0, 0.5, 0.01, 20, 3);
    CHECK(r.epsilon < 1e-2);
    CHECK(r.aborts == 0);

    // without any invariant the harness cannot measure drift at all
    std::vector<expr> drift = {parse("0"), parse("0")};
    std::vector<std::vector<expr>> diffusion = {{parse("x2"), parse("-x1")}};
    sde_system anonymous = make_explicit_system(2, interpretation::stratonovich,
                                                std::move(drift), std::move(diffusion));
    std::vector<double> x0 = {1.0, 0.0};
    CHECK_THROWS_AS(
        invariant_error(anonymous, integrator_kind::euler, x0, 0.0, 1.0, 0.1, 4, 1),
        config_error);
}
