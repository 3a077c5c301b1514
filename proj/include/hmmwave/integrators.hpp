// SPDX-License-Identifier: Apache-2.0

/**
 * @file integrators.hpp
 * @brief Midpoint-type time integrators for second order systems
 *
 *     M v' = -A u - B v + M (g(t, u, v) + f(t)),   u' = v,
 *
 * with SPD mass M, stiffness A and positive semidefinite damping B. Three
 * schemes share the two-stage midpoint structure: a semi-implicit one that
 * treats the linear part implicitly and the source explicitly, a fully
 * implicit midpoint rule with a fixed-point loop over the source, and a fully
 * explicit midpoint rule. All are second order in time; only the explicit
 * rule carries a step restriction from the stiff linear part.
 *
 * Matrices are expected with essential constraints already eliminated
 * (zeroed rows/columns, unit diagonal) and states keep constrained entries
 * at zero throughout.
 */

#pragma once

#include "hmmwave/sparse.hpp"

#include <cmath>
#include <functional>
#include <iostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hmmwave {

enum class Scheme { imex, implicit_midpoint, explicit_midpoint };

inline const char* to_string(Scheme s) {
    switch (s) {
    case Scheme::imex: return "imex";
    case Scheme::implicit_midpoint: return "implicit_mp";
    default: return "explicit_mp";
    }
}

/// Nodal source callback: fills out with g(t, u, v) at the dof lattice.
using NodalSource = std::function<void(double t, std::span<const double> mu,
                                       std::span<const double> nu, std::span<double> out)>;

/// Nodal forcing callback: fills out with f(t) at the dof lattice.
using NodalForcing = std::function<void(double t, std::span<double> out)>;

/// The discrete system; matrices are constrained and shape-compatible.
struct SystemOperators {
    SparseMatrix mass;
    SparseMatrix stiffness;
    SparseMatrix damping; ///< may be an empty (all-zero) matrix of the right shape

    NodalSource nonlinearity;   ///< null means g = 0
    NodalForcing forcing;       ///< null means f = 0
    bool velocity_independent = false; ///< promise that g ignores its v argument

    std::vector<int> constrained_dofs;

    double lipschitz_bound = 0.0;          ///< Lipschitz constant of g, 0 = unknown
    double step_restriction_constant = 0.0; ///< explicit-rule stability bound on tau, 0 = unknown

    int size() const { return mass.rows(); }
};

/// Positions and velocities at one time.
struct State {
    std::vector<double> mu;
    std::vector<double> nu;
    double time = 0.0;
};

/// Work accounting across an integration.
struct StepCounters {
    long composite_solves = 0;         ///< solves with M + (tau^2/4) A + (tau/2) B
    long mass_solves = 0;              ///< solves with M
    long nonlinearity_evaluations = 0; ///< calls to the nonlinearity callback
    long cg_iterations = 0;            ///< CG iterations over all solves
    long fixed_point_iterations = 0;   ///< implicit midpoint sweeps
};

struct IntegrateOptions {
    CgOptions cg{1e-10, 0};
    double fp_tolerance = 1e-10;
    int fp_max_iterations = 50;
    double divergence_threshold = 1e30;
    /// Called after every accepted step; disables the reduced one-solve path.
    std::function<void(int step, const State&)> observer;
};

/// Fixed-step-size context: the composite operator is factored out of the loop.
struct StepSystem {
    double tau = 0.0;
    SparseMatrix composite; ///< M + (tau^2/4) A + (tau/2) B
};

inline StepSystem make_step_system(const SystemOperators& ops, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("make_step_system: tau must be positive");
    const std::pair<double, const SparseMatrix*> terms[] = {
        {1.0, &ops.mass}, {0.25 * tau * tau, &ops.stiffness}, {0.5 * tau, &ops.damping}};
    return {tau, linear_combination(terms)};
}

/// Total energy 0.5 (v' M v + u' A u) of a state.
inline double system_energy(const SystemOperators& ops, const State& state) {
    const std::vector<double> mn = ops.mass.multiply(state.nu);
    const std::vector<double> au = ops.stiffness.multiply(state.mu);
    double e = 0.0;
    for (std::size_t i = 0; i < mn.size(); ++i)
        e += state.nu[i] * mn[i] + state.mu[i] * au[i];
    return 0.5 * e;
}

namespace detail {

inline double l2_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline void zero_at(std::span<double> v, std::span<const int> dofs) {
    for (int d : dofs) v[static_cast<std::size_t>(d)] = 0.0;
}

/// Scratch vectors reused across steps.
struct StepWorkspace {
    std::vector<double> nodal, load_n, load_half, mnu, rhs, nu_half, mu_half, tmp;
    std::vector<double> mu_prev, nu_prev, zeros;

    explicit StepWorkspace(int n)
        : nodal(static_cast<std::size_t>(n)), load_n(static_cast<std::size_t>(n)),
          load_half(static_cast<std::size_t>(n)), mnu(static_cast<std::size_t>(n)),
          rhs(static_cast<std::size_t>(n)), nu_half(static_cast<std::size_t>(n)),
          mu_half(static_cast<std::size_t>(n)), tmp(static_cast<std::size_t>(n)),
          mu_prev(static_cast<std::size_t>(n)), nu_prev(static_cast<std::size_t>(n)),
          zeros(static_cast<std::size_t>(n), 0.0) {}
};

/**
 * @brief load = M (g(t, mu, nu) + f(t)) with constrained entries zeroed.
 *
 * Skips all work when both sources are null.
 */
inline void assemble_source(const SystemOperators& ops, double t, std::span<const double> mu,
                            std::span<const double> nu, StepWorkspace& ws,
                            std::span<double> load, StepCounters& counters) {
    if (!ops.nonlinearity && !ops.forcing) {
        std::fill(load.begin(), load.end(), 0.0);
        return;
    }
    std::fill(ws.nodal.begin(), ws.nodal.end(), 0.0);
    if (ops.nonlinearity) {
        ops.nonlinearity(t, mu, nu, ws.nodal);
        counters.nonlinearity_evaluations += 1;
    }
    if (ops.forcing) {
        ops.forcing(t, ws.tmp);
        for (std::size_t i = 0; i < ws.nodal.size(); ++i) ws.nodal[i] += ws.tmp[i];
    }
    ops.mass.multiply(ws.nodal, load);
    zero_at(load, ops.constrained_dofs);
}

inline void solve_counted(const SparseMatrix& A, std::span<const double> b, std::span<double> x,
                          const CgOptions& cg, StepCounters& counters, bool composite) {
    const CgResult r = solve_spd(A, b, x, cg);
    counters.cg_iterations += r.iterations;
    (composite ? counters.composite_solves : counters.mass_solves) += 1;
}

} // namespace detail

/**
 * @brief One step of the semi-implicit midpoint rule.
 *
 * Half step: (M + (tau^2/4) A + (tau/2) B) v* = M v - (tau/2) A u + (tau/2) L(t, u, v),
 *            u* = u + (tau/2) v*.
 * Full step: M v+ = 2 M v* - M v + tau (L(t + tau/2, u*, v*) - L(t, u, v)),
 *            u+ = u + tau v*.
 *
 * Two linear solves (one composite, one mass) and two source evaluations.
 */
inline void imex_step(const SystemOperators& ops, const StepSystem& sys, State& state,
                      StepCounters& counters, const IntegrateOptions& options,
                      detail::StepWorkspace& ws) {
    const double tau = sys.tau;
    const double t = state.time;

    detail::assemble_source(ops, t, state.mu, state.nu, ws, ws.load_n, counters);
    ops.mass.multiply(state.nu, ws.mnu);
    ops.stiffness.multiply(state.mu, ws.tmp);
    for (std::size_t i = 0; i < ws.rhs.size(); ++i)
        ws.rhs[i] = ws.mnu[i] - 0.5 * tau * ws.tmp[i] + 0.5 * tau * ws.load_n[i];

    ws.nu_half = state.nu;
    detail::solve_counted(sys.composite, ws.rhs, ws.nu_half, options.cg, counters, true);

    for (std::size_t i = 0; i < ws.mu_half.size(); ++i)
        ws.mu_half[i] = state.mu[i] + 0.5 * tau * ws.nu_half[i];

    detail::assemble_source(ops, t + 0.5 * tau, ws.mu_half, ws.nu_half, ws, ws.load_half, counters);
    ops.mass.multiply(ws.nu_half, ws.tmp);
    for (std::size_t i = 0; i < ws.rhs.size(); ++i)
        ws.rhs[i] = 2.0 * ws.tmp[i] - ws.mnu[i] + tau * (ws.load_half[i] - ws.load_n[i]);

    for (std::size_t i = 0; i < state.mu.size(); ++i) state.mu[i] += tau * ws.nu_half[i];
    state.nu = ws.nu_half;
    detail::solve_counted(ops.mass, ws.rhs, state.nu, options.cg, counters, false);
    state.time = t + tau;
}

/**
 * @brief One step of the implicit midpoint rule.
 *
 * The midpoint source L(t + tau/2, u*, v*) is resolved by fixed-point
 * iteration; each sweep is one composite solve. The loop stops when the
 * source or the iterate stops moving (relative to fp_tolerance), so a
 * state-independent source converges in a single sweep. Afterwards one mass
 * solve produces the new velocity.
 *
 * @return number of fixed-point sweeps
 * @throws std::runtime_error if the loop does not converge
 */
inline int implicit_midpoint_step(const SystemOperators& ops, const StepSystem& sys, State& state,
                                  StepCounters& counters, const IntegrateOptions& options,
                                  detail::StepWorkspace& ws) {
    const double tau = sys.tau;
    const double t = state.time;
    const double t_half = t + 0.5 * tau;

    std::vector<double>& load_used = ws.load_n;
    std::vector<double>& load_new = ws.load_half;

    detail::assemble_source(ops, t_half, state.mu, state.nu, ws, load_used, counters);
    ops.mass.multiply(state.nu, ws.mnu);
    ops.stiffness.multiply(state.mu, ws.tmp);
    std::vector<double>& amu = ws.mu_prev; // stash A u, it is loop invariant
    amu = ws.tmp;

    ws.nu_half = state.nu;
    bool converged = false;
    int sweeps = 0;
    while (sweeps < options.fp_max_iterations) {
        ++sweeps;
        counters.fixed_point_iterations += 1;
        for (std::size_t i = 0; i < ws.rhs.size(); ++i)
            ws.rhs[i] = ws.mnu[i] - 0.5 * tau * amu[i] + 0.5 * tau * load_used[i];
        detail::solve_counted(sys.composite, ws.rhs, ws.nu_half, options.cg, counters, true);
        for (std::size_t i = 0; i < ws.mu_half.size(); ++i)
            ws.mu_half[i] = state.mu[i] + 0.5 * tau * ws.nu_half[i];
        detail::assemble_source(ops, t_half, ws.mu_half, ws.nu_half, ws, load_new, counters);

        double diff2 = 0.0, scale2 = 0.0;
        for (std::size_t i = 0; i < load_new.size(); ++i) {
            const double d = load_new[i] - load_used[i];
            diff2 += d * d;
            scale2 += load_new[i] * load_new[i];
        }
        if (std::sqrt(diff2) <= options.fp_tolerance * std::max(1.0, std::sqrt(scale2))) {
            converged = true;
            break;
        }
        if (sweeps >= 2) {
            double xdiff2 = 0.0, xscale2 = 0.0;
            for (std::size_t i = 0; i < ws.nu_half.size(); ++i) {
                const double d = ws.nu_half[i] - ws.nu_prev[i];
                xdiff2 += d * d;
                xscale2 += ws.nu_half[i] * ws.nu_half[i];
            }
            if (std::sqrt(xdiff2) <= options.fp_tolerance * std::max(1.0, std::sqrt(xscale2))) {
                converged = true;
                break;
            }
        }
        ws.nu_prev = ws.nu_half;
        std::swap(load_used, load_new);
    }
    if (!converged)
        throw std::runtime_error("implicit midpoint: fixed point did not converge in " +
                                 std::to_string(options.fp_max_iterations) + " sweeps at t = " +
                                 std::to_string(t));

    ops.mass.multiply(ws.nu_half, ws.tmp);
    for (std::size_t i = 0; i < ws.rhs.size(); ++i)
        ws.rhs[i] = 2.0 * ws.tmp[i] - ws.mnu[i] + tau * (load_new[i] - load_used[i]);
    for (std::size_t i = 0; i < state.mu.size(); ++i) state.mu[i] += tau * ws.nu_half[i];
    state.nu = ws.nu_half;
    detail::solve_counted(ops.mass, ws.rhs, state.nu, options.cg, counters, false);
    state.time = t + tau;
    return sweeps;
}

/**
 * @brief One step of the explicit midpoint rule.
 *
 * Half step: M v* = M v + (tau/2) (-A u - B v + L(t, u, v)), u* = u + (tau/2) v.
 * Full step: M v+ = M v + tau (-A u* - B v* + L(t + tau/2, u*, v*)), u+ = u + tau v*.
 *
 * Two mass solves and two source evaluations; subject to the stiff step
 * restriction.
 */
inline void explicit_midpoint_step(const SystemOperators& ops, const StepSystem& sys, State& state,
                                   StepCounters& counters, const IntegrateOptions& options,
                                   detail::StepWorkspace& ws) {
    const double tau = sys.tau;
    const double t = state.time;

    detail::assemble_source(ops, t, state.mu, state.nu, ws, ws.load_n, counters);
    ops.mass.multiply(state.nu, ws.mnu);
    ops.stiffness.multiply(state.mu, ws.rhs);
    ops.damping.multiply(state.nu, ws.tmp);
    for (std::size_t i = 0; i < ws.rhs.size(); ++i)
        ws.rhs[i] = ws.mnu[i] + 0.5 * tau * (-ws.rhs[i] - ws.tmp[i] + ws.load_n[i]);

    ws.nu_half = state.nu;
    detail::solve_counted(ops.mass, ws.rhs, ws.nu_half, options.cg, counters, false);

    for (std::size_t i = 0; i < ws.mu_half.size(); ++i)
        ws.mu_half[i] = state.mu[i] + 0.5 * tau * state.nu[i];

    detail::assemble_source(ops, t + 0.5 * tau, ws.mu_half, ws.nu_half, ws, ws.load_half, counters);
    ops.stiffness.multiply(ws.mu_half, ws.rhs);
    ops.damping.multiply(ws.nu_half, ws.tmp);
    for (std::size_t i = 0; i < ws.rhs.size(); ++i)
        ws.rhs[i] = ws.mnu[i] + tau * (-ws.rhs[i] - ws.tmp[i] + ws.load_half[i]);

    for (std::size_t i = 0; i < state.mu.size(); ++i) state.mu[i] += tau * ws.nu_half[i];
    state.nu = ws.nu_half;
    detail::solve_counted(ops.mass, ws.rhs, state.nu, options.cg, counters, false);
    state.time = t + tau;
}

struct IntegrationResult {
    State state;
    bool diverged = false;
    double diverged_time = 0.0;
    int steps_taken = 0;
    StepCounters counters;
};

namespace detail {

inline bool exceeds_threshold(std::span<const double> v, double threshold) {
    for (double x : v)
        if (!std::isfinite(x) || std::abs(x) > threshold) return true;
    return false;
}

} // namespace detail

/**
 * @brief March a state from its current time to t_end in steps of tau.
 *
 * t_end - t0 must be an integer multiple of tau (to within 1e-12 relative).
 * When any state entry leaves [-divergence_threshold, divergence_threshold]
 * or stops being finite, integration stops and the result is flagged as
 * diverged with the time of the offending step.
 *
 * A velocity-independent source under the semi-implicit scheme enables a
 * reduced path that carries M v instead of v and performs exactly one linear
 * solve per step (the composite one); the velocity is materialized by a
 * single mass solve at the end. An observer disables this path.
 */
inline IntegrationResult integrate(State initial, const SystemOperators& ops, Scheme scheme,
                                   double tau, double t_end,
                                   const IntegrateOptions& options = {}) {
    if (!(tau > 0.0)) throw std::invalid_argument("integrate: tau must be positive");
    const double span = t_end - initial.time;
    if (span < 0.0) throw std::invalid_argument("integrate: t_end precedes the initial time");
    const double steps_exact = span / tau;
    const long steps = std::lround(steps_exact);
    if (std::abs(steps * tau - span) > 1e-12 * std::max(1.0, std::abs(t_end)))
        throw std::invalid_argument("integrate: time span is not an integer multiple of tau");

    if (scheme == Scheme::explicit_midpoint && ops.step_restriction_constant > 0.0 &&
        tau > ops.step_restriction_constant)
        std::cerr << "warning: tau = " << tau << " exceeds the explicit step restriction "
                  << ops.step_restriction_constant << "\n";
    if (scheme == Scheme::implicit_midpoint && ops.lipschitz_bound > 0.0 &&
        tau * ops.lipschitz_bound >= 2.0)
        std::cerr << "warning: tau * Lipschitz bound = " << tau * ops.lipschitz_bound
                  << " >= 2, the midpoint fixed point may not contract\n";

    IntegrationResult result;
    result.state = std::move(initial);
    const int n = ops.size();
    detail::StepWorkspace ws(n);
    const StepSystem sys = make_step_system(ops, tau);
    const double t0 = result.state.time;

    const bool reduced_path =
        scheme == Scheme::imex && ops.velocity_independent && !options.observer;

    if (reduced_path) {
        // Carry w = M v; the half-step velocity is still solved for through
        // the composite operator, and the full step only rearranges known
        // products, so the mass solve disappears from the loop.
        std::vector<double> w = ops.mass.multiply(result.state.nu);
        for (long k = 0; k < steps; ++k) {
            const double t = t0 + static_cast<double>(k) * tau;
            detail::assemble_source(ops, t, result.state.mu, ws.zeros, ws, ws.load_n,
                                    result.counters);
            ops.stiffness.multiply(result.state.mu, ws.tmp);
            for (std::size_t i = 0; i < ws.rhs.size(); ++i)
                ws.rhs[i] = w[i] - 0.5 * tau * ws.tmp[i] + 0.5 * tau * ws.load_n[i];
            detail::solve_counted(sys.composite, ws.rhs, ws.nu_half, options.cg, result.counters,
                                  true);
            for (std::size_t i = 0; i < ws.mu_half.size(); ++i)
                ws.mu_half[i] = result.state.mu[i] + 0.5 * tau * ws.nu_half[i];
            detail::assemble_source(ops, t + 0.5 * tau, ws.mu_half, ws.zeros, ws, ws.load_half,
                                    result.counters);
            ops.mass.multiply(ws.nu_half, ws.tmp);
            for (std::size_t i = 0; i < w.size(); ++i)
                w[i] = 2.0 * ws.tmp[i] - w[i] + tau * (ws.load_half[i] - ws.load_n[i]);
            for (std::size_t i = 0; i < result.state.mu.size(); ++i)
                result.state.mu[i] += tau * ws.nu_half[i];
            result.state.time = t0 + static_cast<double>(k + 1) * tau;
            result.steps_taken += 1;
            if (detail::exceeds_threshold(result.state.mu, options.divergence_threshold) ||
                detail::exceeds_threshold(w, options.divergence_threshold)) {
                result.diverged = true;
                result.diverged_time = result.state.time;
                break;
            }
        }
        std::fill(result.state.nu.begin(), result.state.nu.end(), 0.0);
        detail::solve_counted(ops.mass, w, result.state.nu, options.cg, result.counters, false);
        return result;
    }

    for (long k = 0; k < steps; ++k) {
        result.state.time = t0 + static_cast<double>(k) * tau;
        switch (scheme) {
        case Scheme::imex:
            imex_step(ops, sys, result.state, result.counters, options, ws);
            break;
        case Scheme::implicit_midpoint:
            implicit_midpoint_step(ops, sys, result.state, result.counters, options, ws);
            break;
        case Scheme::explicit_midpoint:
            explicit_midpoint_step(ops, sys, result.state, result.counters, options, ws);
            break;
        }
        result.state.time = t0 + static_cast<double>(k + 1) * tau;
        result.steps_taken += 1;
        if (detail::exceeds_threshold(result.state.mu, options.divergence_threshold) ||
            detail::exceeds_threshold(result.state.nu, options.divergence_threshold)) {
            result.diverged = true;
            result.diverged_time = result.state.time;
            break;
        }
        if (options.observer) options.observer(result.steps_taken, result.state);
    }
    return result;
}

} // namespace hmmwave
