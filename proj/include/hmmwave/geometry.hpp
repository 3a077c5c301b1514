// SPDX-License-Identifier: Apache-2.0

/**
 * @file geometry.hpp
 * @brief Small value types shared across the library: 2d points/vectors and
 *        symmetric 2x2 tensors.
 */

#pragma once

#include <array>
#include <cmath>

namespace hmmwave {

/// A point or vector in the plane.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double norm() const { return std::sqrt(x * x + y * y); }

    constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }

/**
 * @brief Symmetric 2x2 tensor, stored as the three independent entries.
 *
 * Symmetry is structural: there is no way to represent a nonsymmetric value.
 */
struct SymMat2 {
    double a11 = 0.0;
    double a12 = 0.0;
    double a22 = 0.0;

    static constexpr SymMat2 identity(double scale = 1.0) { return {scale, 0.0, scale}; }
    static constexpr SymMat2 diagonal(double d1, double d2) { return {d1, 0.0, d2}; }

    constexpr Vec2 apply(Vec2 v) const {
        return {a11 * v.x + a12 * v.y, a12 * v.x + a22 * v.y};
    }

    constexpr SymMat2 operator-(const SymMat2& o) const {
        return {a11 - o.a11, a12 - o.a12, a22 - o.a22};
    }

    double frobenius_norm() const {
        return std::sqrt(a11 * a11 + 2.0 * a12 * a12 + a22 * a22);
    }

    /// Smaller and larger eigenvalue of the tensor.
    std::array<double, 2> eigenvalues() const {
        const double mean = 0.5 * (a11 + a22);
        const double disc = std::sqrt(0.25 * (a11 - a22) * (a11 - a22) + a12 * a12);
        return {mean - disc, mean + disc};
    }

    bool is_finite() const {
        return std::isfinite(a11) && std::isfinite(a12) && std::isfinite(a22);
    }
};

inline double frobenius_distance(const SymMat2& a, const SymMat2& b) {
    return (a - b).frobenius_norm();
}

} // namespace hmmwave
