// SPDX-License-Identifier: Apache-2.0

/** @file test_integrators.cpp
 *  @brief Midpoint time steppers: accuracy, energy, counters, divergence.
 */

#include "hmmwave/assembly.hpp"
#include "hmmwave/fe_space.hpp"
#include "hmmwave/integrators.hpp"
#include "hmmwave/mesh.hpp"
#include "hmmwave/tensor_field.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

using namespace hmmwave;

namespace {

/// u'' + u' = 0 as a one dof system: M = [1], A = 0, B = [1].
SystemOperators scalar_friction_system() {
    SystemOperators ops;
    ops.mass = SparseMatrix::from_triplets(1, 1, {{0, 0, 1.0}});
    ops.stiffness = SparseMatrix::from_triplets(1, 1, {});
    ops.damping = SparseMatrix::from_triplets(1, 1, {{0, 0, 1.0}});
    return ops;
}

/// Constrained wave operators with identity diffusion and damping beta K.
SystemOperators damped_wave_system(const FESpace& space, double beta) {
    const QuadratureRule rule = assembly_rule(space.order());
    SystemOperators ops;
    ops.mass = assemble_mass(space, rule);
    ops.stiffness = assemble_stiffness(space, make_constant_field(1.0), rule);
    if (beta > 0.0) {
        std::vector<Triplet> t = ops.stiffness.to_triplets();
        for (Triplet& x : t) x.value *= beta;
        ops.damping = SparseMatrix::from_triplets(space.dof_count(), space.dof_count(), std::move(t));
    } else {
        ops.damping = SparseMatrix::from_triplets(space.dof_count(), space.dof_count(), {});
    }
    ops.constrained_dofs = space.constrained_dofs();
    ops.mass.apply_dirichlet(ops.constrained_dofs);
    ops.stiffness.apply_dirichlet(ops.constrained_dofs);
    ops.damping.apply_dirichlet(ops.constrained_dofs);
    return ops;
}

State smooth_initial_state(const FESpace& space) {
    constexpr double pi = std::numbers::pi;
    State state;
    state.mu = interpolate_nodal(
        space, [](Vec2 x) { return std::sin(pi * x.x) * std::sin(pi * x.y); });
    state.nu = interpolate_nodal(
        space, [](Vec2 x) { return 0.5 * std::sin(pi * x.x) * std::sin(2.0 * pi * x.y); });
    space.constrain_vector(state.mu);
    space.constrain_vector(state.nu);
    return state;
}

double max_abs_difference(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace

TEST_CASE("step system combines the three operators") {
    SystemOperators ops;
    ops.mass = SparseMatrix::from_triplets(2, 2, {{0, 0, 2.0}, {1, 1, 3.0}});
    ops.stiffness =
        SparseMatrix::from_triplets(2, 2, {{0, 0, 4.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 5.0}});
    ops.damping = SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {1, 1, 1.0}});
    const StepSystem sys = make_step_system(ops, 0.2);
    CHECK(sys.tau == 0.2);
    CHECK(sys.composite.coeff(0, 0) == Catch::Approx(2.0 + 0.01 * 4.0 + 0.1));
    CHECK(sys.composite.coeff(0, 1) == Catch::Approx(0.01));
    CHECK(sys.composite.coeff(1, 1) == Catch::Approx(3.0 + 0.01 * 5.0 + 0.1));
    CHECK_THROWS_AS(make_step_system(ops, 0.0), std::invalid_argument);
}

TEST_CASE("system energy matches a hand computation") {
    SystemOperators ops;
    ops.mass = SparseMatrix::from_triplets(2, 2, {{0, 0, 2.0}, {1, 1, 2.0}});
    ops.stiffness = SparseMatrix::from_triplets(2, 2, {{0, 0, 3.0}, {1, 1, 3.0}});
    ops.damping = SparseMatrix::from_triplets(2, 2, {});
    State state;
    state.mu = {1.0, 2.0};
    state.nu = {0.5, -1.0};
    CHECK(system_energy(ops, state) == Catch::Approx(8.75));
}

TEST_CASE("one friction step reproduces the scalar amplification factors") {
    const SystemOperators ops = scalar_friction_system();
    const double tau = 0.1;
    State start;
    start.mu = {0.0};
    start.nu = {1.0};

    const double midpoint_factor = (1.0 - 0.5 * tau) / (1.0 + 0.5 * tau);
    for (Scheme scheme : {Scheme::imex, Scheme::implicit_midpoint}) {
        const IntegrationResult r = integrate(start, ops, scheme, tau, tau);
        CHECK(r.steps_taken == 1);
        CHECK(r.state.nu[0] == Catch::Approx(midpoint_factor).margin(1e-14));
        CHECK(r.state.mu[0] == Catch::Approx(tau / (1.0 + 0.5 * tau)).margin(1e-14));
    }

    const IntegrationResult r = integrate(start, ops, Scheme::explicit_midpoint, tau, tau);
    CHECK(r.state.nu[0] == Catch::Approx(1.0 - tau + 0.5 * tau * tau).margin(1e-14));
}

TEST_CASE("friction decay stays second order accurate") {
    const SystemOperators ops = scalar_friction_system();
    State start;
    start.mu = {0.0};
    start.nu = {1.0};
    double errors[2];
    int level = 0;
    for (double tau : {0.1, 0.05}) {
        const IntegrationResult r = integrate(start, ops, Scheme::imex, tau, 1.0);
        errors[level++] = std::abs(r.state.nu[0] - std::exp(-1.0));
    }
    const double rate = std::log2(errors[0] / errors[1]);
    CHECK(rate > 1.9);
    CHECK(rate < 2.1);
}

TEST_CASE("damped waves never gain energy") {
    const Mesh mesh = build_uniform_quad_mesh({0.0, 0.0}, {1.0, 1.0}, {8, 8});
    const FESpace space(mesh, ElementOrder::q1, ConstraintKind::dirichlet);
    const SystemOperators ops = damped_wave_system(space, 0.01);
    const State start = smooth_initial_state(space);
    const double initial_energy = system_energy(ops, start);

    std::vector<double> energies{initial_energy};
    IntegrateOptions options;
    options.cg = {1e-13, 0};
    options.observer = [&](int, const State& s) { energies.push_back(system_energy(ops, s)); };

    const IntegrationResult r = integrate(start, ops, Scheme::imex, 0.01, 1.0, options);
    CHECK_FALSE(r.diverged);
    CHECK(energies.size() == 101);
    for (std::size_t i = 1; i < energies.size(); ++i)
        CHECK(energies[i] <= energies[i - 1] + 1e-11 * initial_energy);
    CHECK(energies.back() < initial_energy);
}

TEST_CASE("undamped midpoint steps conserve energy") {
    const Mesh mesh = build_uniform_quad_mesh({0.0, 0.0}, {1.0, 1.0}, {8, 8});
    const FESpace space(mesh, ElementOrder::q1, ConstraintKind::dirichlet);
    const SystemOperators ops = damped_wave_system(space, 0.0);
    const State start = smooth_initial_state(space);
    const double initial_energy = system_energy(ops, start);

    IntegrateOptions options;
    options.cg = {1e-13, 0};
    for (Scheme scheme : {Scheme::imex, Scheme::implicit_midpoint}) {
        const IntegrationResult r = integrate(start, ops, scheme, 0.01, 1.0, options);
        const double drift = std::abs(system_energy(ops, r.state) - initial_energy);
        CHECK(drift <= 1e-8 * initial_energy);
    }
}

TEST_CASE("semi-implicit and implicit midpoint agree without sources") {
    const Mesh mesh = build_uniform_quad_mesh({0.0, 0.0}, {1.0, 1.0}, {4, 4});
    const FESpace space(mesh, ElementOrder::q1, ConstraintKind::dirichlet);
    const SystemOperators ops = damped_wave_system(space, 0.01);
    const State start = smooth_initial_state(space);

    IntegrateOptions options;
    options.cg = {1e-13, 0};
    options.fp_tolerance = 1e-12;
    const IntegrationResult a = integrate(start, ops, Scheme::imex, 0.05, 1.0, options);
    const IntegrationResult b = integrate(start, ops, Scheme::implicit_midpoint, 0.05, 1.0, options);
    CHECK(max_abs_difference(a.state.mu, b.state.mu) <= 1e-12);
    CHECK(max_abs_difference(a.state.nu, b.state.nu) <= 1e-12);
}

TEST_CASE("work counters account for every solve and evaluation") {
    const Mesh mesh = build_uniform_quad_mesh({0.0, 0.0}, {1.0, 1.0}, {4, 4});
    const FESpace space(mesh, ElementOrder::q1, ConstraintKind::dirichlet);
    SystemOperators ops = damped_wave_system(space, 0.01);
    ops.nonlinearity = [](double, std::span<const double> mu, std::span<const double>,
                          std::span<double> out) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = -std::sin(mu[i]);
    };
    const State start = smooth_initial_state(space);
    const int steps = 10;

    SECTION("semi-implicit scheme: one composite and one mass solve per step") {
        IntegrateOptions options;
        options.observer = [](int, const State&) {};
        const IntegrationResult r = integrate(start, ops, Scheme::imex, 0.01, 0.1, options);
        CHECK(r.steps_taken == steps);
        CHECK(r.counters.composite_solves == steps);
        CHECK(r.counters.mass_solves == steps);
        CHECK(r.counters.nonlinearity_evaluations == 2 * steps);
        CHECK(r.counters.cg_iterations > 0);
    }

    SECTION("velocity independent sources collapse to one mass solve in total") {
        ops.velocity_independent = true;
        const IntegrationResult r = integrate(start, ops, Scheme::imex, 0.01, 0.1);
        CHECK(r.steps_taken == steps);
        CHECK(r.counters.composite_solves == steps);
        CHECK(r.counters.mass_solves == 1);
        CHECK(r.counters.nonlinearity_evaluations == 2 * steps);
    }

    SECTION("explicit midpoint: two mass solves per step") {
        const IntegrationResult r = integrate(start, ops, Scheme::explicit_midpoint, 0.01, 0.1);
        CHECK(r.counters.composite_solves == 0);
        CHECK(r.counters.mass_solves == 2 * steps);
        CHECK(r.counters.nonlinearity_evaluations == 2 * steps);
    }

    SECTION("implicit midpoint converges in one sweep for frozen sources") {
        SystemOperators frozen = damped_wave_system(space, 0.01);
        frozen.forcing = [](double, std::span<double> out) {
            for (double& v : out) v = 1.0;
        };
        const IntegrationResult r = integrate(start, frozen, Scheme::implicit_midpoint, 0.01, 0.1);
        CHECK(r.counters.fixed_point_iterations == steps);
        CHECK(r.counters.composite_solves == steps);
        CHECK(r.counters.mass_solves == steps);
    }
}

TEST_CASE("the reduced path matches the plain path") {
    const Mesh mesh = build_uniform_quad_mesh({0.0, 0.0}, {1.0, 1.0}, {4, 4});
    const FESpace space(mesh, ElementOrder::q1, ConstraintKind::dirichlet);
    SystemOperators ops = damped_wave_system(space, 0.01);
    ops.nonlinearity = [](double, std::span<const double> mu, std::span<const double>,
                          std::span<double> out) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = -std::sin(mu[i]);
    };
    ops.velocity_independent = true;
    const State start = smooth_initial_state(space);

    IntegrateOptions plain;
    plain.cg = {1e-13, 0};
    plain.observer = [](int, const State&) {};
    IntegrateOptions reduced;
    reduced.cg = {1e-13, 0};

    const IntegrationResult a = integrate(start, ops, Scheme::imex, 0.02, 1.0, plain);
    const IntegrationResult b = integrate(start, ops, Scheme::imex, 0.02, 1.0, reduced);
    CHECK(a.counters.mass_solves == 50);
    CHECK(b.counters.mass_solves == 1);
    CHECK(b.counters.composite_solves == 50);
    CHECK(max_abs_difference(a.state.mu, b.state.mu) <= 1e-9);
    CHECK(max_abs_difference(a.state.nu, b.state.nu) <= 1e-9);
}

TEST_CASE("a non-contracting fixed point raises an error") {
    const Mesh mesh = build_uniform_quad_mesh({0.0, 0.0}, {1.0, 1.0}, {4, 4});
    const FESpace space(mesh, ElementOrder::q1, ConstraintKind::dirichlet);
    SystemOperators ops = damped_wave_system(space, 0.01);
    ops.nonlinearity = [](double, std::span<const double>, std::span<const double> nu,
                          std::span<double> out) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = -40.0 * nu[i];
    };
    ops.lipschitz_bound = 40.0;
    const State start = smooth_initial_state(space);
    IntegrateOptions options;
    options.fp_max_iterations = 4;
    CHECK_THROWS_WITH(integrate(start, ops, Scheme::implicit_midpoint, 0.25, 0.5, options),
                      Catch::Matchers::ContainsSubstring("fixed point"));
}

TEST_CASE("runaway states are flagged as diverged") {
    SystemOperators ops;
    ops.mass = SparseMatrix::from_triplets(1, 1, {{0, 0, 1.0}});
    ops.stiffness = SparseMatrix::from_triplets(1, 1, {{0, 0, 1e6}});
    ops.damping = SparseMatrix::from_triplets(1, 1, {});
    State start;
    start.mu = {1.0};
    start.nu = {0.0};
    const IntegrationResult r = integrate(start, ops, Scheme::explicit_midpoint, 1.0, 10.0);
    CHECK(r.diverged);
    CHECK(r.steps_taken < 10);
    CHECK(r.diverged_time == Catch::Approx(static_cast<double>(r.steps_taken)));
    CHECK(r.diverged_time > 0.0);
}

TEST_CASE("time span must be an integer number of steps") {
    const SystemOperators ops = scalar_friction_system();
    State start;
    start.mu = {0.0};
    start.nu = {1.0};
    CHECK_THROWS_AS(integrate(start, ops, Scheme::imex, 0.3, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(integrate(start, ops, Scheme::imex, -0.1, 1.0), std::invalid_argument);
    State late = start;
    late.time = 2.0;
    CHECK_THROWS_AS(integrate(late, ops, Scheme::imex, 0.1, 1.0), std::invalid_argument);
}

TEST_CASE("the observer sees every accepted step in order") {
    const SystemOperators ops = scalar_friction_system();
    State start;
    start.mu = {0.0};
    start.nu = {1.0};
    std::vector<int> seen;
    std::vector<double> times;
    IntegrateOptions options;
    options.observer = [&](int step, const State& s) {
        seen.push_back(step);
        times.push_back(s.time);
    };
    integrate(start, ops, Scheme::imex, 0.25, 1.0, options);
    REQUIRE(seen.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(seen[static_cast<std::size_t>(i)] == i + 1);
        CHECK(times[static_cast<std::size_t>(i)] == Catch::Approx(0.25 * (i + 1)));
    }
}
