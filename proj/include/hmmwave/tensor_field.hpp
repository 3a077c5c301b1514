// SPDX-License-Identifier: Apache-2.0

/**
 * @file tensor_field.hpp
 * @brief Symmetric-tensor-valued coefficient fields for stiffness assembly.
 */

#pragma once

#include "hmmwave/geometry.hpp"

#include <functional>
#include <string>
#include <utility>

namespace hmmwave {

/**
 * @brief A diffusion coefficient a(x), evaluated pointwise as a symmetric
 *        2x2 tensor.
 *
 * The kind tag records where the field came from (a constant, the closed-form
 * homogenized coefficient, a multiscale cell-problem evaluation, or the raw
 * oscillatory coefficient itself).
 */
struct TensorField {
    enum class Kind { constant, exact_homogenized, hmm, oscillatory, custom };

    Kind kind = Kind::custom;
    std::function<SymMat2(Vec2)> evaluate;
};

inline TensorField make_constant_field(SymMat2 value) {
    return {TensorField::Kind::constant, [value](Vec2) { return value; }};
}

inline TensorField make_constant_field(double scale) {
    return make_constant_field(SymMat2::identity(scale));
}

inline const char* to_string(TensorField::Kind kind) {
    switch (kind) {
    case TensorField::Kind::constant: return "constant";
    case TensorField::Kind::exact_homogenized: return "exact";
    case TensorField::Kind::hmm: return "hmm";
    case TensorField::Kind::oscillatory: return "oscillatory";
    default: return "custom";
    }
}

} // namespace hmmwave
