// SPDX-License-Identifier: Apache-2.0

/**
 * @file mesh.hpp
 * @brief Uniform axis-aligned quadrilateral meshes on rectangles.
 *
 * Nodes are ordered lexicographically with x2 as the major index, so node
 * (i, j) of an n1 x n2 subdivision sits at index j*(n1+1) + i. Elements are
 * ordered the same way. A mesh is built once and then treated as immutable.
 */

#pragma once

#include "hmmwave/geometry.hpp"

#include <array>
#include <stdexcept>
#include <utility>
#include <vector>

namespace hmmwave {

struct Mesh {
    Vec2 origin;
    Vec2 side_lengths;
    std::array<int, 2> subdivisions{0, 0};

    /// Node coordinates, lexicographic (x2 major, x1 minor).
    std::vector<Vec2> nodes;
    /// Per element, the four corner node ids in lexicographic order.
    std::vector<std::array<int, 4>> elements;
    /// Ids of nodes on the boundary of the rectangle, ascending.
    std::vector<int> boundary_nodes;
    /// Periodic identification: (slave, master) pairs, slaves on the max
    /// faces mapped to the matching node on the min faces.
    std::vector<std::pair<int, int>> periodic_pairs;

    int node_count() const { return static_cast<int>(nodes.size()); }
    int element_count() const { return static_cast<int>(elements.size()); }

    double element_width() const { return side_lengths.x / subdivisions[0]; }
    double element_height() const { return side_lengths.y / subdivisions[1]; }
    double element_area() const { return element_width() * element_height(); }

    /// Lower-left corner of element e.
    Vec2 element_origin(int e) const {
        const int ex = e % subdivisions[0];
        const int ey = e / subdivisions[0];
        return {origin.x + ex * element_width(), origin.y + ey * element_height()};
    }
};

/**
 * @brief Build a uniform quadrilateral mesh of a rectangle.
 *
 * @param origin       lower-left corner
 * @param side_lengths extents in x1 and x2, both positive
 * @param subdivisions number of elements per axis, both at least 1
 * @throws std::invalid_argument on nonpositive sizes or subdivisions
 */
inline Mesh build_uniform_quad_mesh(Vec2 origin, Vec2 side_lengths,
                                    std::array<int, 2> subdivisions) {
    if (subdivisions[0] < 1 || subdivisions[1] < 1)
        throw std::invalid_argument("build_uniform_quad_mesh: subdivisions must be >= 1");
    if (!(side_lengths.x > 0.0) || !(side_lengths.y > 0.0))
        throw std::invalid_argument("build_uniform_quad_mesh: side lengths must be positive");

    Mesh mesh;
    mesh.origin = origin;
    mesh.side_lengths = side_lengths;
    mesh.subdivisions = subdivisions;

    const int n1 = subdivisions[0];
    const int n2 = subdivisions[1];
    const double hx = side_lengths.x / n1;
    const double hy = side_lengths.y / n2;

    mesh.nodes.reserve(static_cast<std::size_t>((n1 + 1) * (n2 + 1)));
    for (int j = 0; j <= n2; ++j)
        for (int i = 0; i <= n1; ++i)
            mesh.nodes.push_back({origin.x + i * hx, origin.y + j * hy});

    mesh.elements.reserve(static_cast<std::size_t>(n1 * n2));
    for (int j = 0; j < n2; ++j)
        for (int i = 0; i < n1; ++i) {
            const int base = j * (n1 + 1) + i;
            mesh.elements.push_back({base, base + 1, base + n1 + 1, base + n1 + 2});
        }

    for (int j = 0; j <= n2; ++j)
        for (int i = 0; i <= n1; ++i)
            if (i == 0 || i == n1 || j == 0 || j == n2)
                mesh.boundary_nodes.push_back(j * (n1 + 1) + i);

    // Slaves live on the max faces; the max-max corner maps to the min-min
    // corner. Tangential coordinates are preserved exactly because paired
    // nodes share their lattice index along the face.
    for (int j = 0; j <= n2; ++j)
        for (int i = 0; i <= n1; ++i) {
            if (i != n1 && j != n2) continue;
            const int slave = j * (n1 + 1) + i;
            const int mi = (i == n1) ? 0 : i;
            const int mj = (j == n2) ? 0 : j;
            mesh.periodic_pairs.emplace_back(slave, mj * (n1 + 1) + mi);
        }

    return mesh;
}

/// The periodic (slave, master) identification of a mesh.
inline const std::vector<std::pair<int, int>>& periodic_identification(const Mesh& mesh) {
    return mesh.periodic_pairs;
}

} // namespace hmmwave
