#pragma once

#include <string>
#include <vector>

#include "invsde/simulate.hpp"
#include "invsde/synthesis.hpp"

namespace invsde {

/// Paper-style reference value: invariant drift estimate for one
/// (integrator, initial state, step size) combination at R = 1000.
struct reference_error {
    integrator_kind method;
    int x0_index;
    double h;
    double epsilon;
};

struct catalog_entry {
    std::string name;
    std::string description;
    sde_system system;
    std::vector<std::vector<double>> initial_states;
    double t0 = 0.0;
    double T = 1.0;
    integrator_kind default_method = integrator_kind::euler;
    std::vector<reference_error> references;
};

namespace detail {

inline catalog_entry make_catenoid() {
    catalog_entry e;
    e.name = "catenoid";
    e.description =
        "Scalar-noise system whose state stays on the catenoid "
        "x1^2 + x2^2 = cosh(x3)^2 (minimal surface of revolution).";
    invariant_spec spec = invariant_spec::make(3, parse("x1^2 + x2^2 - cosh(x3)^2"), "general");
    coefficient_choice choice(3, 1);
    choice.set(1, 0, parse("1/5"));
    choice.set(1, 1, parse("1/3"));
    choice.set(2, 1, parse("1/10"));
    e.system = synthesize_system(spec, choice, interpretation::stratonovich);
    e.initial_states = {{0.0, 1.0, 0.0}, {1.0, 0.0, 0.0}};
    e.t0 = 0.0;
    e.T = 10.0;
    e.default_method = integrator_kind::milstein;
    e.references = {
        {integrator_kind::milstein, 0, 1e-2, 3.315e-2},
        {integrator_kind::milstein, 0, 1e-3, 3.295e-3},
        {integrator_kind::milstein, 0, 1e-4, 3.196e-4},
        {integrator_kind::milstein, 1, 1e-2, 3.116e-2},
        {integrator_kind::milstein, 1, 1e-3, 3.262e-3},
        {integrator_kind::milstein, 1, 1e-4, 3.393e-4},
    };
    return e;
}

inline catalog_entry make_dynamic_parabola() {
    catalog_entry e;
    e.name = "dynamic-parabola";
    e.description =
        "Two-dimensional system on the moving manifold x1 + x2^2 + cos(2t) = const; "
        "the drift carries the offset N0 that tracks the manifold motion.";
    invariant_spec spec = invariant_spec::make(2, parse("x1 + x2^2 + cos(2*t)"), "general");
    coefficient_choice choice(2, 1);
    choice.set(1, 0, parse("1/10"));
    choice.set(1, 1, parse("1/5"));
    e.system = synthesize_system(spec, choice, interpretation::stratonovich);
    e.initial_states = {{1.0, 1.0}, {1.0, -1.0}, {0.0, 1.4142135623730951}};
    e.t0 = 0.0;
    e.T = 6.28;
    e.default_method = integrator_kind::artemiev;
    e.references = {
        {integrator_kind::artemiev, 0, 1e-2, 4.040e-4},
        {integrator_kind::artemiev, 0, 1e-3, 4.046e-5},
        {integrator_kind::artemiev, 0, 1e-4, 4.070e-6},
    };
    return e;
}

inline catalog_entry make_sphere() {
    catalog_entry e;
    e.name = "sphere";
    e.description =
        "Linear system dX = F X dt + S X dW on the sphere |x| = |x0|, with\n"
        "  F = [ -1/2  0  -1/2 ;  0  -1  0 ;  -1/2  0  -1/2 ]\n"
        "  S = [  0  1  0 ; -1  0  -1 ;  0  1  0 ]\n"
        "The Stratonovich drift is zero and X(t) = exp(S W(t)) x0 solves the\n"
        "system exactly (a rotation, so |X(t)| is conserved).";
    invariant_spec spec = invariant_spec::make(3, parse("(x1^2 + x2^2 + x3^2)/2"), "general");
    coefficient_choice choice(3, 1);
    choice.set(1, 1, parse("1"));
    choice.set(2, 1, parse("-1"));
    e.system = synthesize_system(spec, choice, interpretation::stratonovich);
    e.system.sphere_analytic = true;
    e.initial_states = {{0.0, 1.0, 1.0}};
    e.t0 = 0.0;
    e.T = 5.0;
    e.default_method = integrator_kind::analytic_sphere;
    return e;
}

inline catalog_entry make_quaternion() {
    catalog_entry e;
    e.name = "quaternion";
    e.description =
        "Rigid-body attitude quaternion driven by a noisy angular velocity\n"
        "(Stratonovich form); |lambda|^2 = 1 is conserved. Constant angular\n"
        "velocity omega = (0.1, 0.1, 0.1) and noise intensities (0.1, 0.1, 0.1).";
    std::vector<expr> drift = {
        parse("(-x2*0.1 - x3*0.1 - x4*0.1)/2"),
        parse("(x1*0.1 - x4*0.1 + x3*0.1)/2"),
        parse("(x4*0.1 + x1*0.1 - x2*0.1)/2"),
        parse("(-x3*0.1 + x2*0.1 + x1*0.1)/2"),
    };
    std::vector<std::vector<expr>> diffusion = {
        {parse("-0.05*x2"), parse("0.05*x1"), parse("0.05*x4"), parse("-0.05*x3")},
        {parse("-0.05*x3"), parse("-0.05*x4"), parse("0.05*x1"), parse("0.05*x2")},
        {parse("-0.05*x4"), parse("0.05*x3"), parse("-0.05*x2"), parse("0.05*x1")},
    };
    e.system = make_explicit_system(4, interpretation::stratonovich, std::move(drift),
                                    std::move(diffusion),
                                    parse("(x1^2 + x2^2 + x3^2 + x4^2)/2"));
    e.initial_states = {{1.0, 0.0, 0.0, 0.0}};
    e.t0 = 0.0;
    e.T = 1.0;
    e.default_method = integrator_kind::euler;
    return e;
}

inline catalog_entry make_iterated_integrals() {
    catalog_entry e;
    e.name = "iterated-integrals";
    e.description =
        "Generator of second-multiplicity iterated stochastic integrals\n"
        "(dX1 = dW1, dX2 = X3 dW1, dX3 = dW2, dX4 = X1 dW2); the exact\n"
        "solution satisfies X2 + X4 - X1 X3 = 0. Noise is noncommutative, so\n"
        "Euler-Maruyama converges at strong order 1/2 on this invariant.";
    invariant_spec spec = invariant_spec::make(4, parse("x2 + x4 - x1*x3"), "general");
    coefficient_choice choice(4, 2);
    choice.set(1, 1, parse("1"));
    choice.set(3, 2, parse("1"));
    e.system = synthesize_system(spec, choice, interpretation::ito);
    e.initial_states = {{0.0, 0.0, 0.0, 0.0}};
    e.t0 = 0.0;
    e.T = 1.0;
    e.default_method = integrator_kind::euler;
    return e;
}

/// Residual self-check over a box around the initial states.
inline void validate_entry(const catalog_entry& e, int points = 1000) {
    counter_rng rng = counter_rng::substream(0x5EEDCA7A106ULL, 0);
    std::vector<sample_point> samples;
    samples.reserve(points);
    for (int p = 0; p < points; ++p) {
        const auto& x0 = e.initial_states[p % e.initial_states.size()];
        sample_point sp;
        sp.t = rng.uniform_range(e.t0, e.T);
        sp.x.resize(x0.size());
        for (std::size_t i = 0; i < x0.size(); ++i)
            sp.x[i] = x0[i] + rng.uniform_range(-0.5, 0.5);
        samples.push_back(std::move(sp));
    }
    residual_report report = invariance_residuals(e.system, *e.system.invariant, samples);
    if (report.max_residual > 1e-10)
        throw error("catalog entry \"" + e.name + "\" failed its invariance self-check " +
                    "(residual " + std::to_string(report.max_residual) + ")");
}

} // namespace detail

/// The built-in systems. Each entry validates its invariance conditions at
/// 1000 random points on first access.
inline const std::vector<catalog_entry>& catalog() {
    static const std::vector<catalog_entry> entries = [] {
        std::vector<catalog_entry> list;
        list.push_back(detail::make_catenoid());
        list.push_back(detail::make_dynamic_parabola());
        list.push_back(detail::make_sphere());
        list.push_back(detail::make_quaternion());
        list.push_back(detail::make_iterated_integrals());
        for (const auto& e : list) detail::validate_entry(e);
        return list;
    }();
    return entries;
}

/// Lookup by name; unknown names list the available entries.
inline const catalog_entry& catalog_entry_by_name(const std::string& name) {
    for (const auto& e : catalog())
        if (e.name == name) return e;
    std::string known;
    for (const auto& e : catalog()) {
        if (!known.empty()) known += ", ";
        known += e.name;
    }
    throw config_error("unknown catalog entry \"" + name + "\" (known entries: " + known + ")");
}

} // namespace invsde
