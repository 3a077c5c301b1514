// SPDX-License-Identifier: Apache-2.0

/**
 * @file assembly.hpp
 * @brief Global FE assembly on uniform quad meshes: mass and stiffness
 *        matrices, load vectors, nodal interpolation and error norms.
 *
 * Assembled matrices are unconstrained; essential constraints are applied
 * afterwards with SparseMatrix::apply_dirichlet and FESpace::constrain_vector.
 * The default quadrature uses order+1 Gauss points per axis for assembly and
 * one more for error norms.
 */

#pragma once

#include "hmmwave/fe_space.hpp"
#include "hmmwave/quadrature.hpp"
#include "hmmwave/sparse.hpp"
#include "hmmwave/tensor_field.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace hmmwave {

/// Default assembly rule: 2x2 Gauss for Q1, 3x3 for Q2.
inline QuadratureRule assembly_rule(ElementOrder order) {
    return gauss_rule(static_cast<int>(order) + 1);
}

/// Default error-norm rule: one order higher than assembly.
inline QuadratureRule error_norm_rule(ElementOrder order) {
    return gauss_rule(static_cast<int>(order) + 2);
}

namespace detail {

/// Stiffness assembly with an arbitrary per-(element, quadrature point)
/// tensor source; shared by the plain and the multiscale assembly paths.
inline SparseMatrix assemble_stiffness_impl(
    const FESpace& space, const QuadratureRule& rule,
    const std::function<SymMat2(int element, int qpoint, Vec2 x)>& tensor_at) {
    const Mesh& mesh = space.mesh();
    const int nd = space.dofs_per_element();
    const int nq = rule.size();
    const double area = mesh.element_area();

    std::vector<std::array<Vec2, 9>> gradients(static_cast<std::size_t>(nq));
    for (int q = 0; q < nq; ++q)
        space.shape_gradients(rule.points[static_cast<std::size_t>(q)],
                              std::span<Vec2>(gradients[static_cast<std::size_t>(q)].data(),
                                              static_cast<std::size_t>(nd)));

    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<std::size_t>(mesh.element_count()) * nd * nd);
    std::array<int, 9> dofs{};

    for (int e = 0; e < mesh.element_count(); ++e) {
        space.element_dofs(e, std::span<int>(dofs.data(), static_cast<std::size_t>(nd)));
        const Vec2 corner = mesh.element_origin(e);
        std::array<double, 81> local{};
        for (int q = 0; q < nq; ++q) {
            const Vec2 ref = rule.points[static_cast<std::size_t>(q)];
            const Vec2 x{corner.x + ref.x * mesh.element_width(),
                         corner.y + ref.y * mesh.element_height()};
            const SymMat2 a = tensor_at(e, q, x);
            if (!a.is_finite())
                throw std::runtime_error("assemble_stiffness: non-finite tensor at quadrature point (" +
                                         std::to_string(x.x) + ", " + std::to_string(x.y) + ")");
            const double w = rule.weights[static_cast<std::size_t>(q)] * area;
            const auto& grad = gradients[static_cast<std::size_t>(q)];
            for (int i = 0; i < nd; ++i) {
                const Vec2 a_grad_i = a.apply(grad[static_cast<std::size_t>(i)]);
                for (int j = 0; j < nd; ++j)
                    local[static_cast<std::size_t>(i * nd + j)] +=
                        w * a_grad_i.dot(grad[static_cast<std::size_t>(j)]);
            }
        }
        for (int i = 0; i < nd; ++i)
            for (int j = 0; j < nd; ++j)
                triplets.push_back({dofs[static_cast<std::size_t>(i)],
                                    dofs[static_cast<std::size_t>(j)],
                                    local[static_cast<std::size_t>(i * nd + j)]});
    }
    return SparseMatrix::from_triplets(space.dof_count(), space.dof_count(), std::move(triplets));
}

} // namespace detail

/// Unconstrained mass matrix M_ij = integral of phi_i phi_j.
inline SparseMatrix assemble_mass(const FESpace& space, const QuadratureRule& rule) {
    const Mesh& mesh = space.mesh();
    const int nd = space.dofs_per_element();
    const int nq = rule.size();
    const double area = mesh.element_area();

    // The local mass matrix is identical for every element of a uniform mesh.
    std::array<double, 81> local{};
    std::array<double, 9> shape{};
    for (int q = 0; q < nq; ++q) {
        space.shape_values(rule.points[static_cast<std::size_t>(q)],
                           std::span<double>(shape.data(), static_cast<std::size_t>(nd)));
        const double w = rule.weights[static_cast<std::size_t>(q)] * area;
        for (int i = 0; i < nd; ++i)
            for (int j = 0; j < nd; ++j)
                local[static_cast<std::size_t>(i * nd + j)] +=
                    w * shape[static_cast<std::size_t>(i)] * shape[static_cast<std::size_t>(j)];
    }

    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<std::size_t>(mesh.element_count()) * nd * nd);
    std::array<int, 9> dofs{};
    for (int e = 0; e < mesh.element_count(); ++e) {
        space.element_dofs(e, std::span<int>(dofs.data(), static_cast<std::size_t>(nd)));
        for (int i = 0; i < nd; ++i)
            for (int j = 0; j < nd; ++j)
                triplets.push_back({dofs[static_cast<std::size_t>(i)],
                                    dofs[static_cast<std::size_t>(j)],
                                    local[static_cast<std::size_t>(i * nd + j)]});
    }
    return SparseMatrix::from_triplets(space.dof_count(), space.dof_count(), std::move(triplets));
}

/// Unconstrained stiffness matrix A_ij = integral of a grad(phi_j) . grad(phi_i).
inline SparseMatrix assemble_stiffness(const FESpace& space, const TensorField& tensor,
                                       const QuadratureRule& rule) {
    return detail::assemble_stiffness_impl(
        space, rule, [&tensor](int, int, Vec2 x) { return tensor.evaluate(x); });
}

/**
 * @brief Load vector of interpolated data: M times nodal values.
 *
 * All right-hand sides (forcing and nonlinearity) enter the discrete system
 * through their nodal interpolant, so the load is just a mass multiply.
 */
inline std::vector<double> assemble_load(const SparseMatrix& mass,
                                         std::span<const double> nodal_values) {
    return mass.multiply(nodal_values);
}

/// Nodal interpolant of g on the dof lattice.
inline std::vector<double> interpolate_nodal(const FESpace& space,
                                             const std::function<double(Vec2)>& g) {
    std::vector<double> values(static_cast<std::size_t>(space.dof_count()));
    for (int d = 0; d < space.dof_count(); ++d)
        values[static_cast<std::size_t>(d)] = g(space.dof_coordinate(d));
    return values;
}

struct ErrorNorms {
    double l2 = 0.0;
    double h1_semi = 0.0;

    double h1() const { return std::sqrt(l2 * l2 + h1_semi * h1_semi); }
};

/**
 * @brief L2 and H1-seminorm distance between a FE function and a smooth function.
 *
 * Pass exact = 0 (and gradient = 0) to obtain the norms of the FE function
 * itself, or coefficients = 0 for the quadrature norms of the smooth function.
 */
inline ErrorNorms error_norms(const FESpace& space, std::span<const double> coefficients,
                              const std::function<double(Vec2)>& exact,
                              const std::function<Vec2(Vec2)>& exact_gradient,
                              const QuadratureRule& rule) {
    const Mesh& mesh = space.mesh();
    const int nd = space.dofs_per_element();
    const int nq = rule.size();
    const double area = mesh.element_area();

    std::vector<std::array<double, 9>> shapes(static_cast<std::size_t>(nq));
    std::vector<std::array<Vec2, 9>> gradients(static_cast<std::size_t>(nq));
    for (int q = 0; q < nq; ++q) {
        space.shape_values(rule.points[static_cast<std::size_t>(q)],
                           std::span<double>(shapes[static_cast<std::size_t>(q)].data(),
                                             static_cast<std::size_t>(nd)));
        space.shape_gradients(rule.points[static_cast<std::size_t>(q)],
                              std::span<Vec2>(gradients[static_cast<std::size_t>(q)].data(),
                                              static_cast<std::size_t>(nd)));
    }

    double l2_sq = 0.0;
    double h1_sq = 0.0;
    std::array<int, 9> dofs{};
    for (int e = 0; e < mesh.element_count(); ++e) {
        space.element_dofs(e, std::span<int>(dofs.data(), static_cast<std::size_t>(nd)));
        const Vec2 corner = mesh.element_origin(e);
        for (int q = 0; q < nq; ++q) {
            const Vec2 ref = rule.points[static_cast<std::size_t>(q)];
            const Vec2 x{corner.x + ref.x * mesh.element_width(),
                         corner.y + ref.y * mesh.element_height()};
            double uh = 0.0;
            Vec2 grad_uh{};
            for (int m = 0; m < nd; ++m) {
                const double c = coefficients[static_cast<std::size_t>(dofs[m])];
                uh += c * shapes[static_cast<std::size_t>(q)][static_cast<std::size_t>(m)];
                grad_uh = grad_uh + c * gradients[static_cast<std::size_t>(q)][static_cast<std::size_t>(m)];
            }
            const double w = rule.weights[static_cast<std::size_t>(q)] * area;
            const double diff = uh - exact(x);
            const Vec2 grad_diff = grad_uh - exact_gradient(x);
            l2_sq += w * diff * diff;
            h1_sq += w * grad_diff.dot(grad_diff);
        }
    }
    return {std::sqrt(l2_sq), std::sqrt(h1_sq)};
}

} // namespace hmmwave
