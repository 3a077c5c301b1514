// SPDX-License-Identifier: Apache-2.0

/**
 * @file model.hpp
 * @brief The concrete benchmark problem on the unit square:
 *
 *     d_tt u - div(a grad u) - beta Laplace(d_t u) + G(d_t u) = f
 *
 * with homogeneous Dirichlet data, a layered oscillatory coefficient
 * a(x) = (0.33 + 0.15 (sin(2 pi x1) + sin(2 pi x1 / eps))) I, a closed-form
 * effective tensor, a saturating odd nonlinearity G, and a manufactured
 * solution u = e^{pi t} sin(pi x1^2) sin(pi x2^2) whose residual defines f.
 */

#pragma once

#include "hmmwave/assembly.hpp"
#include "hmmwave/fe_space.hpp"
#include "hmmwave/hmm_assembly.hpp"
#include "hmmwave/integrators.hpp"
#include "hmmwave/micro.hpp"
#include "hmmwave/tensor_field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace hmmwave {

struct ProblemSpec {
    double epsilon = 1.0 / 128.0;      ///< fast scale of the coefficient
    double damping_beta = 0.01;        ///< strong damping scalar
    double nonlin_theta = 1.0;         ///< nonlinearity amplitude
    double nonlin_exponent = 0.6;      ///< gamma in (0, 1]
    double nonlin_shift = 1e-4;        ///< sigma >= 0
    double final_time = 1.0;
    /// Alternative reading of the nonlinearity with the shift inside |.|.
    bool literal_shift_inside_abs = false;

    void validate() const {
        if (!(epsilon > 0.0)) throw std::invalid_argument("ProblemSpec: epsilon must be positive");
        if (!(damping_beta > 0.0)) throw std::invalid_argument("ProblemSpec: damping must be positive");
        if (!(nonlin_exponent > 0.0 && nonlin_exponent <= 1.0))
            throw std::invalid_argument("ProblemSpec: exponent must lie in (0, 1]");
        if (!(nonlin_shift >= 0.0)) throw std::invalid_argument("ProblemSpec: shift must be >= 0");
        if (!(final_time > 0.0)) throw std::invalid_argument("ProblemSpec: final time must be positive");
    }
};

/// Scalar value of the oscillatory coefficient in two-scale form a(x, y).
inline double two_scale_value(Vec2 slow, Vec2 fast) {
    using std::numbers::pi;
    return 0.33 + 0.15 * (std::sin(2.0 * pi * slow.x) + std::sin(2.0 * pi * fast.x));
}

inline TwoScaleCoefficient two_scale_coefficient(const ProblemSpec& spec) {
    spec.validate();
    return {[](Vec2 slow, Vec2 fast) { return two_scale_value(slow, fast); }, 0.03, 0.63};
}

/// The oscillatory coefficient a(x) = a(x, x / eps) as a tensor.
inline SymMat2 oscillatory_coefficient(Vec2 x, const ProblemSpec& spec) {
    return SymMat2::identity(two_scale_value(x, {x.x / spec.epsilon, x.y / spec.epsilon}));
}

inline TensorField oscillatory_field(const ProblemSpec& spec) {
    spec.validate();
    return {TensorField::Kind::oscillatory,
            [spec](Vec2 x) { return oscillatory_coefficient(x, spec); }};
}

/**
 * @brief Closed-form effective tensor of the layered coefficient.
 *
 * With g(x1) = 1.1 + 0.5 sin(2 pi x1) the tensor is
 * diag(0.3 sqrt(g^2 - 1/4), 0.3 g): the harmonic mean across the layers and
 * the arithmetic mean along them.
 */
inline SymMat2 homogenized_tensor_exact(double x1) {
    using std::numbers::pi;
    const double g = 1.1 + 0.5 * std::sin(2.0 * pi * x1);
    return SymMat2::diagonal(0.3 * std::sqrt(g * g - 0.25), 0.3 * g);
}

inline TensorField exact_homogenized_field() {
    return {TensorField::Kind::exact_homogenized,
            [](Vec2 x) { return homogenized_tensor_exact(x.x); }};
}

/// Quadrature evaluation of the effective tensor, independent of the closed form.
inline SymMat2 homogenized_tensor_reference_1d(double x1, int panels = 64) {
    return layered_reference_tensor(
        [x1](double y1) { return two_scale_value({x1, 0.0}, {y1, 0.0}); }, panels);
}

/**
 * @brief Odd saturating nonlinearity G(eta) = theta ((|eta|+sigma)^gamma - sigma^gamma) sgn(eta).
 *
 * Globally Lipschitz with constant gamma theta / sigma^{1-gamma} for
 * sigma > 0. The literal variant moves the shift inside the absolute value.
 */
inline double nonlinearity(double eta, const ProblemSpec& spec) {
    const double sign = eta > 0.0 ? 1.0 : (eta < 0.0 ? -1.0 : 0.0);
    const double base = spec.literal_shift_inside_abs ? std::abs(eta + spec.nonlin_shift)
                                                      : std::abs(eta) + spec.nonlin_shift;
    return spec.nonlin_theta * sign *
           (std::pow(base, spec.nonlin_exponent) - std::pow(spec.nonlin_shift, spec.nonlin_exponent));
}

inline double nonlinearity_lipschitz(const ProblemSpec& spec) {
    if (spec.nonlin_shift > 0.0)
        return spec.nonlin_exponent * spec.nonlin_theta /
               std::pow(spec.nonlin_shift, 1.0 - spec.nonlin_exponent);
    if (spec.nonlin_exponent == 1.0) return spec.nonlin_theta;
    return 0.0; // not Lipschitz; unknown
}

inline double exact_solution(double t, Vec2 x) {
    using std::numbers::pi;
    return std::exp(pi * t) * std::sin(pi * x.x * x.x) * std::sin(pi * x.y * x.y);
}

inline double exact_velocity(double t, Vec2 x) {
    return std::numbers::pi * exact_solution(t, x);
}

inline Vec2 exact_gradient(double t, Vec2 x) {
    using std::numbers::pi;
    const double e = std::exp(pi * t);
    const double s1 = std::sin(pi * x.x * x.x), c1 = std::cos(pi * x.x * x.x);
    const double s2 = std::sin(pi * x.y * x.y), c2 = std::cos(pi * x.y * x.y);
    return {e * 2.0 * pi * x.x * c1 * s2, e * 2.0 * pi * x.y * s1 * c2};
}

/**
 * @brief Forcing that makes exact_solution solve the effective equation.
 *
 * f = d_tt u - (a1' d1 u + a1 d11 u + a2 d22 u) - beta d_t Laplace u + G(d_t u),
 * with the diagonal effective tensor diag(a1(x1), a2(x1)) and its derivative
 * a1' = 0.3 g g' / sqrt(g^2 - 1/4), g' = pi cos(2 pi x1). All derivatives are
 * analytic; a finite-difference oracle in the test suite guards them.
 */
inline double manufactured_rhs(double t, Vec2 x, const ProblemSpec& spec) {
    using std::numbers::pi;
    const double e = std::exp(pi * t);
    const double s1 = std::sin(pi * x.x * x.x), c1 = std::cos(pi * x.x * x.x);
    const double s2 = std::sin(pi * x.y * x.y), c2 = std::cos(pi * x.y * x.y);

    const double u = e * s1 * s2;
    const double d1u = e * 2.0 * pi * x.x * c1 * s2;
    const double d11u = e * s2 * (2.0 * pi * c1 - 4.0 * pi * pi * x.x * x.x * s1);
    const double d22u = e * s1 * (2.0 * pi * c2 - 4.0 * pi * pi * x.y * x.y * s2);

    const double g = 1.1 + 0.5 * std::sin(2.0 * pi * x.x);
    const double gp = pi * std::cos(2.0 * pi * x.x);
    const double root = std::sqrt(g * g - 0.25);
    const double a1 = 0.3 * root;
    const double a1p = 0.3 * g * gp / root;
    const double a2 = 0.3 * g;

    const double diffusion = a1p * d1u + a1 * d11u + a2 * d22u;
    const double damping = spec.damping_beta * pi * (d11u + d22u);
    return pi * pi * u - diffusion - damping + nonlinearity(pi * u, spec);
}

/// Nodal interpolants of the exact solution and velocity at t = 0.
inline State initial_state(const ProblemSpec& spec, const FESpace& space) {
    spec.validate();
    State state;
    state.mu = interpolate_nodal(space, [](Vec2 x) { return exact_solution(0.0, x); });
    state.nu = interpolate_nodal(space, [](Vec2 x) { return exact_velocity(0.0, x); });
    space.constrain_vector(state.mu);
    space.constrain_vector(state.nu);
    state.time = 0.0;
    return state;
}

/**
 * @brief Assemble the constrained operators of the benchmark problem.
 *
 * The damping matrix is beta times the identity-coefficient stiffness
 * (discrete -beta Laplace of the velocity). The nonlinearity enters with a
 * negative sign because the system form keeps sources on the right-hand
 * side. Tensor evaluations are spread over @p threads, which only matters
 * for multiscale fields.
 */
inline SystemOperators make_wave_operators(const ProblemSpec& spec, const FESpace& space,
                                           const TensorField& field, const QuadratureRule& rule,
                                           int threads = 1) {
    spec.validate();
    SystemOperators ops;
    ops.mass = assemble_mass(space, rule);
    ops.stiffness = assemble_stiffness_parallel(space, field, rule, threads);
    {
        std::vector<Triplet> t = assemble_stiffness(space, make_constant_field(1.0), rule).to_triplets();
        for (Triplet& x : t) x.value *= spec.damping_beta;
        ops.damping = SparseMatrix::from_triplets(space.dof_count(), space.dof_count(), std::move(t));
    }
    ops.constrained_dofs = space.constrained_dofs();
    ops.mass.apply_dirichlet(ops.constrained_dofs);
    ops.stiffness.apply_dirichlet(ops.constrained_dofs);
    ops.damping.apply_dirichlet(ops.constrained_dofs);

    ops.nonlinearity = [spec](double, std::span<const double> /*mu*/, std::span<const double> nu,
                              std::span<double> out) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = -nonlinearity(nu[i], spec);
    };
    ops.velocity_independent = false;

    std::vector<Vec2> coords(static_cast<std::size_t>(space.dof_count()));
    for (int d = 0; d < space.dof_count(); ++d)
        coords[static_cast<std::size_t>(d)] = space.dof_coordinate(d);
    ops.forcing = [spec, coords = std::move(coords)](double t, std::span<double> out) {
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = manufactured_rhs(t, coords[i], spec);
    };

    ops.lipschitz_bound = nonlinearity_lipschitz(spec);
    const double h =
        std::min(space.mesh().element_width(), space.mesh().element_height());
    const double lambda = (space.order() == ElementOrder::q1 ? 24.0 : 120.0) / (h * h);
    ops.step_restriction_constant = 2.0 / (spec.damping_beta * lambda);
    return ops;
}

} // namespace hmmwave
