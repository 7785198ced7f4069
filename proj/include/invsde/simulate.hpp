#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "invsde/linalg.hpp"
#include "invsde/rng.hpp"
#include "invsde/synthesis.hpp"

#include <json.hpp>

namespace invsde {

enum class integrator_kind : std::uint8_t { euler, milstein, artemiev, analytic_sphere };

inline const char* to_string(integrator_kind k) {
    switch (k) {
    case integrator_kind::euler: return "euler";
    case integrator_kind::milstein: return "milstein";
    case integrator_kind::artemiev: return "artemiev";
    case integrator_kind::analytic_sphere: return "analytic_sphere";
    }
    return "?";
}

inline integrator_kind integrator_from_string(const std::string& name) {
    if (name == "euler") return integrator_kind::euler;
    if (name == "milstein") return integrator_kind::milstein;
    if (name == "artemiev") return integrator_kind::artemiev;
    if (name == "analytic_sphere") return integrator_kind::analytic_sphere;
    throw config_error("unknown integrator \"" + name +
                       "\" (expected euler, milstein, artemiev or analytic_sphere)");
}

struct sim_config {
    double t0 = 0.0;
    double T = 1.0;
    double h = 0.01;
    std::vector<double> x0;
    integrator_kind method = integrator_kind::euler;
    std::uint64_t seed = 0;
    std::uint64_t trajectory_index = 0;

    /// Number of steps; the grid must land on T exactly (to 1e-9 relative).
    int steps() const {
        if (h <= 0.0) throw config_error("step size must be positive");
        if (T <= t0) throw config_error("final time must exceed the initial time");
        double ratio = (T - t0) / h;
        double rounded = std::round(ratio);
        if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
            throw config_error("time interval is not an integer number of steps");
        return static_cast<int>(rounded);
    }

    void validate(int n) const {
        steps();
        if (static_cast<int>(x0.size()) != n)
            throw config_error("initial state length " + std::to_string(x0.size()) +
                               " does not match system dimension " + std::to_string(n));
    }
};

/// Wiener increments on a fixed grid plus their running sums.
struct wiener_path {
    int steps = 0;
    int s = 0;
    double h = 0.0;
    std::vector<double> increments; // steps x s, row-major
    std::vector<double> cumulative; // (steps+1) x s, cumulative[0] = 0

    double increment(int k, int l) const { return increments[k * s + l]; }
    double value(int k, int l) const { return cumulative[k * s + l]; }
};

/// Deterministic N x s increment matrix: substream (seed, trajectory_index),
/// entries sqrt(h) * xi in step-major order.
inline wiener_path wiener_increments(std::uint64_t seed, std::uint64_t trajectory_index,
                                     int steps, int s, double h) {
    if (steps < 1 || s < 1) throw config_error("wiener path needs steps >= 1 and s >= 1");
    if (h <= 0.0) throw config_error("step size must be positive");
    wiener_path path;
    path.steps = steps;
    path.s = s;
    path.h = h;
    path.increments.resize(static_cast<std::size_t>(steps) * s);
    path.cumulative.assign(static_cast<std::size_t>(steps + 1) * s, 0.0);
    counter_rng rng = counter_rng::substream(seed, trajectory_index);
    const double root_h = std::sqrt(h);
    for (int k = 0; k < steps; ++k)
        for (int l = 0; l < s; ++l) {
            double dw = root_h * rng.next_normal();
            path.increments[k * s + l] = dw;
            path.cumulative[(k + 1) * s + l] = path.cumulative[k * s + l] + dw;
        }
    return path;
}

struct trajectory {
    int n = 0;
    integrator_kind method = integrator_kind::euler;
    std::uint64_t seed = 0;
    std::uint64_t trajectory_index = 0;
    std::vector<double> times;            // N+1
    std::vector<double> states;           // (N+1) x n, row-major
    std::vector<double> invariant_values; // N+1, empty when M is unknown

    int steps() const { return static_cast<int>(times.size()) - 1; }
    std::span<const double> state(int k) const {
        return std::span<const double>(states.data() + static_cast<std::size_t>(k) * n, n);
    }
};

// ---------------------------------------------------------------------------
// One-step maps
// ---------------------------------------------------------------------------

namespace detail {

inline void require_finite(std::span<const double> y, int step) {
    for (double v : y)
        if (!std::isfinite(v))
            throw trajectory_abort(step, "non-finite state at step " + std::to_string(step));
}

} // namespace detail

/// Euler-Maruyama update Y' = Y + h f + sigma dW for an Ito system.
inline void euler_step(const sde_system& system, double t, double h,
                       std::span<const double> y, std::span<const double> dw,
                       std::span<double> out) {
    if (system.interp != interpretation::ito)
        throw config_error("euler step needs the Ito drift");
    const int n = system.n;
    std::array<double, max_dim> f, col;
    system.drift->eval(t, y, std::span<double>(f.data(), n));
    for (int i = 0; i < n; ++i) out[i] = y[i] + h * f[i];
    for (int l = 0; l < system.s; ++l) {
        system.diffusion[l]->eval(t, y, std::span<double>(col.data(), n));
        for (int i = 0; i < n; ++i) out[i] += col[i] * dw[l];
    }
}

/// Milstein update for scalar noise, written with the Stratonovich drift:
/// Y' = Y + h a + sqrt(h) sigma xi + (h/2) (d sigma/dx) sigma xi^2.
inline void milstein_step(const sde_system& system, double t, double h,
                          std::span<const double> y, double xi, std::span<double> out) {
    if (system.interp != interpretation::stratonovich)
        throw config_error("milstein step needs the Stratonovich drift");
    if (system.s != 1)
        throw config_error("milstein step supports a single noise channel, system has s=" +
                           std::to_string(system.s));
    const int n = system.n;
    std::array<double, max_dim> a, col, jv;
    system.drift->eval(t, y, std::span<double>(a.data(), n));
    const vector_field& sigma = *system.diffusion[0];
    sigma.eval(t, y, std::span<double>(col.data(), n));
    detail::field_jacvec<double>(sigma, t, y, std::span<const double>(col.data(), n),
                                 std::span<double>(jv.data(), n));
    const double root_h = std::sqrt(h);
    for (int i = 0; i < n; ++i)
        out[i] = y[i] + h * a[i] + root_h * col[i] * xi + 0.5 * h * jv[i] * xi * xi;
}

/// Rosenbrock-type update: the Milstein increment multiplied by
/// [E - (h/2) da/dx]^{-1}.
inline void artemiev_step(const sde_system& system, double t, double h,
                          std::span<const double> y, double xi, std::span<double> out) {
    if (system.interp != interpretation::stratonovich)
        throw config_error("artemiev step needs the Stratonovich drift");
    if (system.s != 1)
        throw config_error("artemiev step supports a single noise channel, system has s=" +
                           std::to_string(system.s));
    const int n = system.n;
    std::array<double, max_dim> a, col, jv;
    std::array<double, max_dim * max_dim> jac;
    system.drift->eval(t, y, std::span<double>(a.data(), n));
    const vector_field& sigma = *system.diffusion[0];
    sigma.eval(t, y, std::span<double>(col.data(), n));
    detail::field_jacvec<double>(sigma, t, y, std::span<const double>(col.data(), n),
                                 std::span<double>(jv.data(), n));
    detail::field_jacobian(*system.drift, t, y, std::span<double>(jac.data(), n * n));
    std::array<double, max_dim * max_dim> m;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            m[i * n + j] = (i == j ? 1.0 : 0.0) - 0.5 * h * jac[i * n + j];
    std::array<double, max_dim> rhs;
    const double root_h = std::sqrt(h);
    for (int i = 0; i < n; ++i)
        rhs[i] = h * a[i] + root_h * col[i] * xi + 0.5 * h * jv[i] * xi * xi;
    linalg::solve_inplace(std::span<double>(m.data(), n * n), std::span<double>(rhs.data(), n),
                          n);
    for (int i = 0; i < n; ++i) out[i] = y[i] + rhs[i];
}

// ---------------------------------------------------------------------------
// Closed-form sphere solution
// ---------------------------------------------------------------------------

/// Rotation matrix exp(S w) of the linear sphere system, expressed through
/// cos(sqrt(2) w) and sin(sqrt(2) w).
inline std::array<double, 9> sphere_rotation(double w) {
    const double r2 = std::sqrt(2.0);
    const double c = std::cos(r2 * w);
    const double s = std::sin(r2 * w);
    return {0.5 * (1.0 + c),  0.5 * r2 * s, 0.5 * (c - 1.0),
            -0.5 * r2 * s,    c,            -0.5 * r2 * s,
            0.5 * (c - 1.0),  0.5 * r2 * s, 0.5 * (1.0 + c)};
}

/// Exact trajectory X(t_k) = exp(S W(t_k)) x0 of the sphere system.
inline trajectory sphere_analytic(std::span<const double> x0, const wiener_path& path,
                                  double t0 = 0.0) {
    if (x0.size() != 3) throw config_error("the analytic sphere solution needs n = 3");
    if (path.s != 1) throw config_error("the analytic sphere solution needs s = 1");
    trajectory tr;
    tr.n = 3;
    tr.method = integrator_kind::analytic_sphere;
    const int N = path.steps;
    tr.times.resize(N + 1);
    tr.states.resize(static_cast<std::size_t>(N + 1) * 3);
    tr.invariant_values.resize(N + 1);
    for (int k = 0; k <= N; ++k) {
        tr.times[k] = t0 + k * path.h;
        auto R = sphere_rotation(path.value(k, 0));
        double* y = tr.states.data() + static_cast<std::size_t>(k) * 3;
        for (int i = 0; i < 3; ++i)
            y[i] = R[i * 3 + 0] * x0[0] + R[i * 3 + 1] * x0[1] + R[i * 3 + 2] * x0[2];
        tr.invariant_values[k] = 0.5 * (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]);
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Trajectory driver
// ---------------------------------------------------------------------------

namespace detail {

/// Adapt the system interpretation to what the integrator consumes.
/// Synthesized systems convert silently; hand-entered systems must already
/// be declared in the required interpretation.
inline sde_system resolve_for_integrator(const sde_system& system, integrator_kind method) {
    interpretation needed = method == integrator_kind::euler ? interpretation::ito
                                                             : interpretation::stratonovich;
    if (method == integrator_kind::analytic_sphere) return system;
    if (system.interp == needed) return system;
    if (system.provenance) return convert_interpretation(system, needed);
    throw config_error(std::string("integrator ") + to_string(method) + " needs the " +
                       to_string(needed) +
                       " drift; convert the hand-entered system explicitly");
}

} // namespace detail

/// Run one trajectory. The Wiener path is drawn from the substream
/// (seed, trajectory_index); aborted steps raise trajectory_abort.
inline trajectory simulate_trajectory(const sde_system& system, const sim_config& config) {
    config.validate(system.n);
    const int N = config.steps();
    if (config.method == integrator_kind::analytic_sphere) {
        if (!system.sphere_analytic)
            throw config_error("analytic_sphere applies only to the linear sphere system");
        wiener_path path =
            wiener_increments(config.seed, config.trajectory_index, N, 1, config.h);
        trajectory tr = sphere_analytic(config.x0, path, config.t0);
        tr.seed = config.seed;
        tr.trajectory_index = config.trajectory_index;
        return tr;
    }
    sde_system sys = detail::resolve_for_integrator(system, config.method);
    if ((config.method == integrator_kind::milstein ||
         config.method == integrator_kind::artemiev) &&
        sys.s != 1)
        throw config_error(std::string(to_string(config.method)) +
                           " supports a single noise channel, system has s=" +
                           std::to_string(sys.s));
    wiener_path path =
        wiener_increments(config.seed, config.trajectory_index, N, sys.s, config.h);

    trajectory tr;
    tr.n = sys.n;
    tr.method = config.method;
    tr.seed = config.seed;
    tr.trajectory_index = config.trajectory_index;
    tr.times.resize(N + 1);
    tr.states.resize(static_cast<std::size_t>(N + 1) * sys.n);
    const bool has_m = static_cast<bool>(sys.invariant);
    if (has_m) tr.invariant_values.resize(N + 1);

    std::array<double, max_dim> y, ynext;
    for (int i = 0; i < sys.n; ++i) y[i] = config.x0[i];
    const double root_h = std::sqrt(config.h);
    auto record = [&](int k) {
        tr.times[k] = config.t0 + k * config.h;
        for (int i = 0; i < sys.n; ++i) tr.states[static_cast<std::size_t>(k) * sys.n + i] = y[i];
        if (has_m)
            tr.invariant_values[k] = sys.invariant->evaluate<double>(
                tr.times[k], std::span<const double>(y.data(), sys.n));
    };
    record(0);
    for (int k = 0; k < N; ++k) {
        const double t = config.t0 + k * config.h;
        std::span<const double> ys(y.data(), sys.n);
        std::span<double> outs(ynext.data(), sys.n);
        try {
            switch (config.method) {
            case integrator_kind::euler:
                euler_step(sys, t, config.h, ys,
                           std::span<const double>(path.increments.data() + k * sys.s, sys.s),
                           outs);
                break;
            case integrator_kind::milstein:
                milstein_step(sys, t, config.h, ys, path.increment(k, 0) / root_h, outs);
                break;
            case integrator_kind::artemiev:
                artemiev_step(sys, t, config.h, ys, path.increment(k, 0) / root_h, outs);
                break;
            default:
                throw config_error("unsupported integrator");
            }
        } catch (const trajectory_abort&) {
            throw;
        } catch (const config_error&) {
            throw;
        } catch (const error& e) {
            // evaluation/pivot/solve failures abort just this trajectory
            throw trajectory_abort(k, std::string("step ") + std::to_string(k) + ": " + e.what());
        }
        detail::require_finite(std::span<const double>(ynext.data(), sys.n), k);
        for (int i = 0; i < sys.n; ++i) y[i] = ynext[i];
        record(k + 1);
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

namespace detail {

inline std::string full_precision(double v) { return format_double(v); }

} // namespace detail

/// CSV with header k,t,x1..xn,M; full-precision values.
inline std::string trajectory_csv(const trajectory& tr) {
    std::string out = "k,t";
    for (int i = 1; i <= tr.n; ++i) out += ",x" + std::to_string(i);
    out += ",M\n";
    const bool has_m = !tr.invariant_values.empty();
    for (int k = 0; k <= tr.steps(); ++k) {
        out += std::to_string(k);
        out += ',';
        out += detail::full_precision(tr.times[k]);
        for (double v : tr.state(k)) {
            out += ',';
            out += detail::full_precision(v);
        }
        out += ',';
        out += has_m ? detail::full_precision(tr.invariant_values[k]) : "";
        out += '\n';
    }
    return out;
}

/// JSON document mirroring the CSV fields plus seed provenance.
inline std::string trajectory_json(const trajectory& tr) {
    nlohmann::json j;
    j["integrator"] = to_string(tr.method);
    j["seed"] = tr.seed;
    j["trajectory_index"] = tr.trajectory_index;
    j["n"] = tr.n;
    j["t"] = tr.times;
    auto& xs = j["x"] = nlohmann::json::array();
    for (int k = 0; k <= tr.steps(); ++k) {
        auto row = nlohmann::json::array();
        for (double v : tr.state(k)) row.push_back(v);
        xs.push_back(std::move(row));
    }
    if (!tr.invariant_values.empty()) j["M"] = tr.invariant_values;
    return j.dump(2);
}

} // namespace invsde
