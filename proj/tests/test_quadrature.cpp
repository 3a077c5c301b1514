// SPDX-License-Identifier: Apache-2.0

/** @file test_quadrature.cpp
 *  @brief Tensor-product Gauss rules on the reference square.
 */

#include "hmmwave/quadrature.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace hmmwave;

namespace {

double integrate_monomial(const QuadratureRule& rule, int px, int py) {
    double sum = 0.0;
    for (int q = 0; q < rule.size(); ++q)
        sum += rule.weights[static_cast<std::size_t>(q)] *
               std::pow(rule.points[static_cast<std::size_t>(q)].x, px) *
               std::pow(rule.points[static_cast<std::size_t>(q)].y, py);
    return sum;
}

} // namespace

TEST_CASE("weights are positive and sum to one") {
    for (int n = 1; n <= 5; ++n) {
        const QuadratureRule rule = gauss_rule(n);
        CHECK(rule.size() == n * n);
        double sum = 0.0;
        for (double w : rule.weights) {
            CHECK(w > 0.0);
            sum += w;
        }
        CHECK(sum == Catch::Approx(1.0).epsilon(1e-14));
        for (const Vec2& p : rule.points) {
            CHECK(p.x > 0.0);
            CHECK(p.x < 1.0);
            CHECK(p.y > 0.0);
            CHECK(p.y < 1.0);
        }
    }
}

TEST_CASE("two point rule has the textbook nodes") {
    const QuadratureRule rule = gauss_rule(2);
    const double lo = 0.5 - 0.5 / std::sqrt(3.0);
    const double hi = 0.5 + 0.5 / std::sqrt(3.0);
    REQUIRE(rule.size() == 4);
    CHECK(rule.points[0].x == Catch::Approx(lo).epsilon(1e-14));
    CHECK(rule.points[1].x == Catch::Approx(hi).epsilon(1e-14));
    CHECK(rule.points[0].y == Catch::Approx(lo).epsilon(1e-14));
    CHECK(rule.points[3].y == Catch::Approx(hi).epsilon(1e-14));
    for (double w : rule.weights) CHECK(w == Catch::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("rule with n points per axis is exact to degree 2n-1") {
    for (int n = 1; n <= 5; ++n) {
        const QuadratureRule rule = gauss_rule(n);
        const int degree = 2 * n - 1;
        for (int p = 0; p <= degree; ++p) {
            const double exact = 1.0 / (p + 1);
            CHECK(integrate_monomial(rule, p, 0) == Catch::Approx(exact).epsilon(1e-13));
            CHECK(integrate_monomial(rule, 0, p) == Catch::Approx(exact).epsilon(1e-13));
        }
        // Mixed monomial of full degree per axis.
        const double exact = 1.0 / ((degree + 1) * (degree + 1));
        CHECK(integrate_monomial(rule, degree, degree) == Catch::Approx(exact).epsilon(1e-12));
    }
}

TEST_CASE("degree beyond the exactness limit is integrated inexactly") {
    const QuadratureRule rule = gauss_rule(2);
    // x^4 has degree 4 > 3; Gauss error for this rule is well known to be nonzero.
    const double approx = integrate_monomial(rule, 4, 0);
    CHECK(std::abs(approx - 0.2) > 1e-4);
}

TEST_CASE("unsupported axis counts are rejected") {
    CHECK_THROWS_AS(gauss_rule(0), std::invalid_argument);
    CHECK_THROWS_AS(gauss_rule(6), std::invalid_argument);
}
