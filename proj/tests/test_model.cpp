// SPDX-License-Identifier: Apache-2.0

/** @file test_model.cpp
 *  @brief The benchmark problem: coefficient, nonlinearity, manufactured data.
 */

#include "hmmwave/model.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

using namespace hmmwave;

namespace {

/// Fourth order central first derivative.
double fd1(const std::function<double(double)>& f, double s, double h) {
    return (f(s - 2.0 * h) - 8.0 * f(s - h) + 8.0 * f(s + h) - f(s + 2.0 * h)) / (12.0 * h);
}

/// Fourth order central second derivative.
double fd2(const std::function<double(double)>& f, double s, double h) {
    return (-f(s - 2.0 * h) + 16.0 * f(s - h) - 30.0 * f(s) + 16.0 * f(s + h) -
            f(s + 2.0 * h)) /
           (12.0 * h * h);
}

} // namespace

TEST_CASE("oscillatory coefficient matches spot values and bounds") {
    ProblemSpec spec;
    CHECK(two_scale_value({0.0, 0.0}, {0.0, 0.0}) == Catch::Approx(0.33));

    spec.epsilon = 0.25;
    const SymMat2 a = oscillatory_coefficient({0.25, 0.7}, spec);
    CHECK(a.a11 == Catch::Approx(0.48).margin(1e-14));
    CHECK(a.a22 == Catch::Approx(0.48).margin(1e-14));
    CHECK(a.a12 == 0.0);

    const TwoScaleCoefficient c = two_scale_coefficient(spec);
    CHECK(c.lower == Catch::Approx(0.03));
    CHECK(c.upper == Catch::Approx(0.63));
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const double v = c.value({unit(rng), unit(rng)}, {unit(rng), unit(rng)});
        CHECK(v >= c.lower - 1e-12);
        CHECK(v <= c.upper + 1e-12);
    }
}

TEST_CASE("nonlinearity is odd, saturating, and globally Lipschitz") {
    ProblemSpec spec;
    CHECK(nonlinearity(0.0, spec) == 0.0);
    CHECK(nonlinearity(2.0, spec) == Catch::Approx(1.51179).margin(2e-5));

    std::mt19937 rng(5);
    std::uniform_real_distribution<double> span(-3.0, 3.0);
    for (int i = 0; i < 200; ++i) {
        const double eta = span(rng);
        CHECK(nonlinearity(-eta, spec) == Catch::Approx(-nonlinearity(eta, spec)).margin(1e-15));
    }

    const double lip = nonlinearity_lipschitz(spec);
    CHECK(lip == Catch::Approx(0.6 * std::pow(10.0, 1.6)).epsilon(1e-12));
    for (int i = 0; i < 10000; ++i) {
        const double a = span(rng), b = span(rng);
        const double diff = std::abs(nonlinearity(a, spec) - nonlinearity(b, spec));
        CHECK(diff <= lip * std::abs(a - b) * (1.0 + 1e-12) + 1e-15);
    }
}

TEST_CASE("literal shift variant only differs for negative arguments") {
    ProblemSpec plain;
    ProblemSpec literal;
    literal.literal_shift_inside_abs = true;
    CHECK(nonlinearity(1.0, literal) == Catch::Approx(nonlinearity(1.0, plain)).margin(1e-15));
    CHECK(std::abs(nonlinearity(-1.0, literal) - nonlinearity(-1.0, plain)) > 1e-6);
}

TEST_CASE("exact solution satisfies boundary, velocity, and growth relations") {
    CHECK(exact_solution(0.0, {0.5, 0.5}) == Catch::Approx(0.5).epsilon(1e-13));
    constexpr double pi = std::numbers::pi;
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        const double t = unit(rng);
        const Vec2 x{unit(rng), unit(rng)};
        CHECK(std::abs(exact_solution(t, {0.0, x.y})) < 1e-13);
        CHECK(std::abs(exact_solution(t, {1.0, x.y})) < 1e-12);
        CHECK(std::abs(exact_solution(t, {x.x, 0.0})) < 1e-13);
        CHECK(exact_velocity(t, x) == Catch::Approx(pi * exact_solution(t, x)).margin(1e-13));
        CHECK(exact_solution(t + 1.0, x) ==
              Catch::Approx(std::exp(pi) * exact_solution(t, x)).epsilon(1e-12));
    }
}

TEST_CASE("exact gradient agrees with finite differences") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> inner(0.1, 0.9);
    std::uniform_real_distribution<double> time(0.0, 1.0);
    const double h = 1e-3;
    for (int i = 0; i < 50; ++i) {
        const double t = time(rng);
        const Vec2 x{inner(rng), inner(rng)};
        const Vec2 g = exact_gradient(t, x);
        const double g1 = fd1([&](double s) { return exact_solution(t, {s, x.y}); }, x.x, h);
        const double g2 = fd1([&](double s) { return exact_solution(t, {x.x, s}); }, x.y, h);
        CHECK(g.x == Catch::Approx(g1).margin(1e-6 * std::max(1.0, std::abs(g1))));
        CHECK(g.y == Catch::Approx(g2).margin(1e-6 * std::max(1.0, std::abs(g2))));
    }
}

TEST_CASE("manufactured forcing agrees with a finite difference oracle") {
    ProblemSpec spec;
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> inner(0.05, 0.95);
    std::uniform_real_distribution<double> time(0.1, 0.9);
    const double h = 1e-3;
    for (int i = 0; i < 50; ++i) {
        const double t = time(rng);
        const Vec2 x{inner(rng), inner(rng)};

        const double u_tt = fd2([&](double s) { return exact_solution(s, x); }, t, h);
        const double d1u = fd1([&](double s) { return exact_solution(t, {s, x.y}); }, x.x, h);
        const double d11u = fd2([&](double s) { return exact_solution(t, {s, x.y}); }, x.x, h);
        const double d22u = fd2([&](double s) { return exact_solution(t, {x.x, s}); }, x.y, h);
        const double d11v = fd2([&](double s) { return exact_velocity(t, {s, x.y}); }, x.x, h);
        const double d22v = fd2([&](double s) { return exact_velocity(t, {x.x, s}); }, x.y, h);

        const SymMat2 tensor = homogenized_tensor_exact(x.x);
        const double a1p = fd1([](double s) { return homogenized_tensor_exact(s).a11; }, x.x, h);

        const double oracle = u_tt -
                              (a1p * d1u + tensor.a11 * d11u + tensor.a22 * d22u) -
                              spec.damping_beta * (d11v + d22v) +
                              nonlinearity(exact_velocity(t, x), spec);
        const double f = manufactured_rhs(t, x, spec);
        CHECK(f == Catch::Approx(oracle).margin(1e-6 * std::max(1.0, std::abs(f))));
    }
}

TEST_CASE("effective tensor has the layered closed form") {
    const SymMat2 a = homogenized_tensor_exact(0.25);
    CHECK(a.a11 == Catch::Approx(0.3 * std::sqrt(2.31)).epsilon(1e-14));
    CHECK(a.a22 == Catch::Approx(0.48).epsilon(1e-14));
    CHECK(a.a12 == 0.0);

    const TensorField field = exact_homogenized_field();
    const SymMat2 b = field.evaluate({0.25, 0.9});
    CHECK(b.a11 == Catch::Approx(a.a11));
    CHECK(b.a22 == Catch::Approx(a.a22));
}

TEST_CASE("quadrature reference tensor reproduces the closed form") {
    std::mt19937 rng(29);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        const double x1 = unit(rng);
        const SymMat2 exact = homogenized_tensor_exact(x1);
        const SymMat2 ref = homogenized_tensor_reference_1d(x1);
        CHECK(std::abs(ref.a11 - exact.a11) <= 1e-10);
        CHECK(std::abs(ref.a22 - exact.a22) <= 1e-10);
        CHECK(std::abs(ref.a12) <= 1e-14);
    }
}

TEST_CASE("initial state interpolates the exact data with zero trace") {
    ProblemSpec spec;
    const Mesh mesh = build_uniform_quad_mesh({0.0, 0.0}, {1.0, 1.0}, {8, 8});
    const FESpace space(mesh, ElementOrder::q1, ConstraintKind::dirichlet);
    const State state = initial_state(spec, space);
    CHECK(state.time == 0.0);
    CHECK(state.mu.size() == static_cast<std::size_t>(space.dof_count()));
    for (int d : space.constrained_dofs()) {
        CHECK(state.mu[static_cast<std::size_t>(d)] == 0.0);
        CHECK(state.nu[static_cast<std::size_t>(d)] == 0.0);
    }
    constexpr double pi = std::numbers::pi;
    for (int d = 0; d < space.dof_count(); ++d) {
        const Vec2 x = space.dof_coordinate(d);
        const bool constrained = state.mu[static_cast<std::size_t>(d)] == 0.0 &&
                                 state.nu[static_cast<std::size_t>(d)] == 0.0;
        if (!constrained)
            CHECK(state.nu[static_cast<std::size_t>(d)] ==
                  Catch::Approx(pi * exact_solution(0.0, x)).margin(1e-14));
    }
}

TEST_CASE("wave operators have the advertised structure") {
    ProblemSpec spec;
    const Mesh mesh = build_uniform_quad_mesh({0.0, 0.0}, {1.0, 1.0}, {4, 4});
    const FESpace space(mesh, ElementOrder::q1, ConstraintKind::dirichlet);
    const QuadratureRule rule = assembly_rule(ElementOrder::q1);
    const SystemOperators ops = make_wave_operators(spec, space, exact_homogenized_field(), rule);

    SparseMatrix expected_damping = assemble_stiffness(space, make_constant_field(1.0), rule);
    {
        std::vector<Triplet> t = expected_damping.to_triplets();
        for (Triplet& x : t) x.value *= spec.damping_beta;
        expected_damping = SparseMatrix::from_triplets(space.dof_count(), space.dof_count(), std::move(t));
    }
    expected_damping.apply_dirichlet(space.constrained_dofs());
    for (int r = 0; r < ops.damping.rows(); ++r)
        CHECK(ops.damping.coeff(r, r) == Catch::Approx(expected_damping.coeff(r, r)));

    CHECK_FALSE(ops.velocity_independent);
    CHECK(ops.lipschitz_bound == Catch::Approx(nonlinearity_lipschitz(spec)));
    CHECK(ops.step_restriction_constant ==
          Catch::Approx(2.0 / (spec.damping_beta * 24.0 / (0.25 * 0.25))));

    const std::size_t n = static_cast<std::size_t>(space.dof_count());
    std::vector<double> mu(n, 0.0), nu(n, 2.0), out(n, 0.0);
    ops.nonlinearity(0.0, mu, nu, out);
    CHECK(out[0] == Catch::Approx(-nonlinearity(2.0, spec)));

    std::vector<double> force(n, 0.0);
    ops.forcing(0.5, force);
    const Vec2 x7 = space.dof_coordinate(7);
    CHECK(force[7] == Catch::Approx(manufactured_rhs(0.5, x7, spec)));
}

TEST_CASE("problem spec validation rejects bad parameters") {
    ProblemSpec bad_eps;
    bad_eps.epsilon = 0.0;
    CHECK_THROWS_AS(bad_eps.validate(), std::invalid_argument);

    ProblemSpec bad_gamma;
    bad_gamma.nonlin_exponent = 1.5;
    CHECK_THROWS_AS(bad_gamma.validate(), std::invalid_argument);

    ProblemSpec bad_time;
    bad_time.final_time = -1.0;
    CHECK_THROWS_AS(bad_time.validate(), std::invalid_argument);
}
