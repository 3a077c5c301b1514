// SPDX-License-Identifier: Apache-2.0

/**
 * @file quadrature.hpp
 * @brief Tensor-product Gauss-Legendre quadrature on the reference square [0,1]^2.
 */

#pragma once

#include "hmmwave/geometry.hpp"

#include <stdexcept>
#include <vector>

namespace hmmwave {

/**
 * @brief Quadrature rule on the reference element [0,1]^2.
 *
 * Weights sum to 1 (the reference measure). A rule with n points per axis
 * integrates tensor-product polynomials of degree 2n-1 per axis exactly.
 */
struct QuadratureRule {
    std::vector<Vec2> points;
    std::vector<double> weights;
    int points_per_axis = 0;

    int size() const { return static_cast<int>(points.size()); }
};

namespace detail {

struct Gauss1d {
    std::vector<double> points;  // on [0,1]
    std::vector<double> weights; // summing to 1
};

/// Gauss-Legendre nodes/weights on [-1,1], mapped to [0,1].
inline Gauss1d gauss_1d(int n) {
    // Nodes and weights on [-1,1] to 19 digits.
    static const double x2 = 0.5773502691896257645;
    static const double x3 = 0.7745966692414833770;
    static const double x4a = 0.3399810435848562648, w4a = 0.6521451548625461426;
    static const double x4b = 0.8611363115940525752, w4b = 0.3478548451374538574;
    static const double x5a = 0.5384693101056830910, w5a = 0.4786286704993664680;
    static const double x5b = 0.9061798459386639928, w5b = 0.2369268850561890875;

    Gauss1d g;
    std::vector<double> xs, ws;
    switch (n) {
    case 1: xs = {0.0}; ws = {2.0}; break;
    case 2: xs = {-x2, x2}; ws = {1.0, 1.0}; break;
    case 3: xs = {-x3, 0.0, x3}; ws = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0}; break;
    case 4: xs = {-x4b, -x4a, x4a, x4b}; ws = {w4b, w4a, w4a, w4b}; break;
    case 5: xs = {-x5b, -x5a, 0.0, x5a, x5b}; ws = {w5b, w5a, 128.0 / 225.0, w5a, w5b}; break;
    default:
        throw std::invalid_argument("gauss_rule: points_per_axis must be in 1..5");
    }
    g.points.resize(xs.size());
    g.weights.resize(ws.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        g.points[i] = 0.5 * (1.0 + xs[i]);
        g.weights[i] = 0.5 * ws[i];
    }
    return g;
}

} // namespace detail

/**
 * @brief Tensor-product Gauss rule with @p points_per_axis points per axis (1..5).
 *
 * Points are ordered lexicographically (second coordinate major), matching
 * the node ordering convention used elsewhere.
 */
inline QuadratureRule gauss_rule(int points_per_axis) {
    const detail::Gauss1d g = detail::gauss_1d(points_per_axis);
    QuadratureRule rule;
    rule.points_per_axis = points_per_axis;
    const int n = static_cast<int>(g.points.size());
    rule.points.reserve(static_cast<std::size_t>(n) * n);
    rule.weights.reserve(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            rule.points.push_back({g.points[i], g.points[j]});
            rule.weights.push_back(g.weights[i] * g.weights[j]);
        }
    return rule;
}

} // namespace hmmwave
