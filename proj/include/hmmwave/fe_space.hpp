// SPDX-License-Identifier: Apache-2.0

/**
 * @file fe_space.hpp
 * @brief Continuous Lagrange finite element spaces (Q1, Q2) on uniform quad
 *        meshes, with optional homogeneous Dirichlet or periodic constraints.
 *
 * Degrees of freedom live on the refined tensor lattice with order*n+1
 * points per axis, ordered lexicographically (x2 major, x1 minor). For a
 * periodic space, lattice points on the max faces are identified with their
 * partners on the min faces and one dof is pinned to fix the constant.
 */

#pragma once

#include "hmmwave/geometry.hpp"
#include "hmmwave/mesh.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace hmmwave {

enum class ElementOrder { q1 = 1, q2 = 2 };

enum class ConstraintKind { none, dirichlet, periodic };

/// Values of the 1d Lagrange basis of degree @p order at reference t in [0,1].
inline void lagrange_values_1d(int order, double t, std::span<double> out) {
    if (order == 1) {
        out[0] = 1.0 - t;
        out[1] = t;
    } else {
        out[0] = (2.0 * t - 1.0) * (t - 1.0);
        out[1] = 4.0 * t * (1.0 - t);
        out[2] = t * (2.0 * t - 1.0);
    }
}

inline void lagrange_derivatives_1d(int order, double t, std::span<double> out) {
    if (order == 1) {
        out[0] = -1.0;
        out[1] = 1.0;
    } else {
        out[0] = 4.0 * t - 3.0;
        out[1] = 4.0 - 8.0 * t;
        out[2] = 4.0 * t - 1.0;
    }
}

class FESpace {
public:
    /**
     * @param pinned_lattice_index lattice point whose dof is pinned for a
     *        periodic space (must be a master point); ignored otherwise
     */
    FESpace(const Mesh& mesh, ElementOrder order,
            ConstraintKind constraint = ConstraintKind::none,
            int pinned_lattice_index = 0)
        : mesh_(&mesh), order_(order), constraint_(constraint) {
        const int k = static_cast<int>(order);
        nx_ = k * mesh.subdivisions[0] + 1;
        ny_ = k * mesh.subdivisions[1] + 1;
        const int lattice_size = nx_ * ny_;

        lattice_to_dof_.assign(static_cast<std::size_t>(lattice_size), -1);

        if (constraint == ConstraintKind::periodic) {
            if (order != ElementOrder::q1)
                throw std::invalid_argument("FESpace: periodic constraints are only supported for Q1");
            int next = 0;
            for (int j = 0; j < ny_; ++j)
                for (int i = 0; i < nx_; ++i) {
                    if (i == nx_ - 1 || j == ny_ - 1) continue;
                    lattice_to_dof_[static_cast<std::size_t>(j * nx_ + i)] = next++;
                }
            dof_count_ = next;
            for (int j = 0; j < ny_; ++j)
                for (int i = 0; i < nx_; ++i) {
                    if (i != nx_ - 1 && j != ny_ - 1) continue;
                    const int mi = (i == nx_ - 1) ? 0 : i;
                    const int mj = (j == ny_ - 1) ? 0 : j;
                    lattice_to_dof_[static_cast<std::size_t>(j * nx_ + i)] =
                        lattice_to_dof_[static_cast<std::size_t>(mj * nx_ + mi)];
                }
            const int pinned = lattice_to_dof_.at(static_cast<std::size_t>(pinned_lattice_index));
            if (pinned < 0)
                throw std::invalid_argument("FESpace: invalid pinned lattice index");
            constrained_dofs_ = {pinned};
        } else {
            dof_count_ = lattice_size;
            for (int l = 0; l < lattice_size; ++l)
                lattice_to_dof_[static_cast<std::size_t>(l)] = l;
            if (constraint == ConstraintKind::dirichlet) {
                for (int j = 0; j < ny_; ++j)
                    for (int i = 0; i < nx_; ++i)
                        if (i == 0 || i == nx_ - 1 || j == 0 || j == ny_ - 1)
                            constrained_dofs_.push_back(j * nx_ + i);
            }
        }

        dof_coordinates_.assign(static_cast<std::size_t>(dof_count_), Vec2{});
        const double sx = mesh.element_width() / k;
        const double sy = mesh.element_height() / k;
        for (int j = ny_ - 1; j >= 0; --j)
            for (int i = nx_ - 1; i >= 0; --i) {
                const int dof = lattice_to_dof_[static_cast<std::size_t>(j * nx_ + i)];
                dof_coordinates_[static_cast<std::size_t>(dof)] = {
                    mesh.origin.x + i * sx, mesh.origin.y + j * sy};
            }

        is_constrained_.assign(static_cast<std::size_t>(dof_count_), 0);
        for (int d : constrained_dofs_) is_constrained_[static_cast<std::size_t>(d)] = 1;
    }

    const Mesh& mesh() const { return *mesh_; }
    ElementOrder order() const { return order_; }
    ConstraintKind constraint() const { return constraint_; }
    int dof_count() const { return dof_count_; }
    int dofs_per_element() const { return order_ == ElementOrder::q1 ? 4 : 9; }
    int lattice_extent_x() const { return nx_; }
    int lattice_extent_y() const { return ny_; }

    const std::vector<int>& constrained_dofs() const { return constrained_dofs_; }
    bool dof_is_constrained(int dof) const { return is_constrained_[static_cast<std::size_t>(dof)] != 0; }

    /// Dof id of a lattice point (the master dof for periodic slaves).
    int lattice_dof(int lattice_index) const {
        return lattice_to_dof_.at(static_cast<std::size_t>(lattice_index));
    }

    /// Representative coordinate of a dof (the master point for periodic slaves).
    Vec2 dof_coordinate(int dof) const { return dof_coordinates_[static_cast<std::size_t>(dof)]; }

    /// Dof ids of element e in lexicographic local order.
    void element_dofs(int e, std::span<int> out) const {
        const int k = static_cast<int>(order_);
        const int ex = e % mesh_->subdivisions[0];
        const int ey = e / mesh_->subdivisions[0];
        int m = 0;
        for (int b = 0; b <= k; ++b)
            for (int a = 0; a <= k; ++a)
                out[m++] = lattice_to_dof_[static_cast<std::size_t>((k * ey + b) * nx_ + (k * ex + a))];
    }

    /// Shape function values at a reference point in [0,1]^2.
    void shape_values(Vec2 ref, std::span<double> out) const {
        const int k = static_cast<int>(order_);
        std::array<double, 3> lx{}, ly{};
        lagrange_values_1d(k, ref.x, lx);
        lagrange_values_1d(k, ref.y, ly);
        int m = 0;
        for (int b = 0; b <= k; ++b)
            for (int a = 0; a <= k; ++a)
                out[m++] = lx[static_cast<std::size_t>(a)] * ly[static_cast<std::size_t>(b)];
    }

    /// Physical shape function gradients at a reference point in [0,1]^2.
    void shape_gradients(Vec2 ref, std::span<Vec2> out) const {
        const int k = static_cast<int>(order_);
        std::array<double, 3> lx{}, ly{}, dx{}, dy{};
        lagrange_values_1d(k, ref.x, lx);
        lagrange_values_1d(k, ref.y, ly);
        lagrange_derivatives_1d(k, ref.x, dx);
        lagrange_derivatives_1d(k, ref.y, dy);
        const double inv_hx = 1.0 / mesh_->element_width();
        const double inv_hy = 1.0 / mesh_->element_height();
        int m = 0;
        for (int b = 0; b <= k; ++b)
            for (int a = 0; a <= k; ++a) {
                out[m].x = dx[static_cast<std::size_t>(a)] * ly[static_cast<std::size_t>(b)] * inv_hx;
                out[m].y = lx[static_cast<std::size_t>(a)] * dy[static_cast<std::size_t>(b)] * inv_hy;
                ++m;
            }
    }

    /// Zero the constrained entries of a coefficient or load vector.
    void constrain_vector(std::span<double> values) const {
        for (int d : constrained_dofs_) values[static_cast<std::size_t>(d)] = 0.0;
    }

private:
    const Mesh* mesh_;
    ElementOrder order_;
    ConstraintKind constraint_;
    int nx_ = 0, ny_ = 0;
    int dof_count_ = 0;
    std::vector<int> lattice_to_dof_;
    std::vector<Vec2> dof_coordinates_;
    std::vector<int> constrained_dofs_;
    std::vector<char> is_constrained_;
};

/// A finite element function: a space together with its coefficient vector.
struct FEFunction {
    const FESpace* space = nullptr;
    std::vector<double> coefficients;

    /// Point evaluation (the point must lie inside the mesh rectangle).
    double evaluate(Vec2 x) const {
        const Mesh& mesh = space->mesh();
        const double hx = mesh.element_width();
        const double hy = mesh.element_height();
        int ex = static_cast<int>((x.x - mesh.origin.x) / hx);
        int ey = static_cast<int>((x.y - mesh.origin.y) / hy);
        ex = std::clamp(ex, 0, mesh.subdivisions[0] - 1);
        ey = std::clamp(ey, 0, mesh.subdivisions[1] - 1);
        const Vec2 corner = mesh.element_origin(ey * mesh.subdivisions[0] + ex);
        const Vec2 ref{(x.x - corner.x) / hx, (x.y - corner.y) / hy};
        std::array<double, 9> shape{};
        std::array<int, 9> dofs{};
        const int nd = space->dofs_per_element();
        space->shape_values(ref, std::span<double>(shape.data(), static_cast<std::size_t>(nd)));
        space->element_dofs(ey * mesh.subdivisions[0] + ex,
                            std::span<int>(dofs.data(), static_cast<std::size_t>(nd)));
        double value = 0.0;
        for (int m = 0; m < nd; ++m)
            value += shape[static_cast<std::size_t>(m)] * coefficients[static_cast<std::size_t>(dofs[m])];
        return value;
    }
};

} // namespace hmmwave
