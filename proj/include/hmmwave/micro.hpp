// SPDX-License-Identifier: Apache-2.0

/**
 * @file micro.hpp
 * @brief Cell problems on sampling domains and the homogenized tensor they
 *        induce.
 *
 * A cell problem lives on the square K = xbar + delta*(-1/2, 1/2)^2, meshed
 * uniformly with Q1 elements. For each unit direction e_j the corrector
 * theta_j solves
 *
 *     integral_K a (grad theta_j + e_j) . grad w = 0
 *
 * for all w in the coupling space (periodic, homogeneous Dirichlet, or
 * unconstrained with mean-free gradient). The upscaled tensor is the energy
 * of the corrected linears phi_j = (x - xbar)_j + theta_j:
 *
 *     a_mn = (1 / delta^2) integral_K a grad phi_m . grad phi_n.
 */

#pragma once

#include "hmmwave/assembly.hpp"
#include "hmmwave/fe_space.hpp"
#include "hmmwave/mesh.hpp"
#include "hmmwave/quadrature.hpp"
#include "hmmwave/sparse.hpp"
#include "hmmwave/tensor_field.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

namespace hmmwave {

/// Boundary coupling of the cell problem.
enum class CellCoupling { periodic, dirichlet, neumann_mean_free };

/// Whether the slow variable is frozen at the cell center or varies across it.
enum class CoefficientSampling { frozen, sampled };

inline const char* to_string(CellCoupling c) {
    switch (c) {
    case CellCoupling::periodic: return "periodic";
    case CellCoupling::dirichlet: return "dirichlet";
    default: return "neumann-mean-free";
    }
}

inline const char* to_string(CoefficientSampling s) {
    return s == CoefficientSampling::frozen ? "frozen" : "sampled";
}

/**
 * @brief A scalar coefficient a(x, y) of a slow and a fast variable.
 *
 * The cell solver evaluates it at y = x / epsilon; lower and upper are
 * ellipticity bounds used for sanity checks where known (0 = unknown).
 */
struct TwoScaleCoefficient {
    std::function<double(Vec2 slow, Vec2 fast)> value;
    double lower = 0.0;
    double upper = 0.0;
};

/// Everything that determines one cell problem.
struct CellConfig {
    Vec2 macro_point;
    double delta = 0.0;
    double epsilon = 0.0;
    int micro_subdivisions = 0;
    CellCoupling coupling = CellCoupling::periodic;
    CoefficientSampling sampling = CoefficientSampling::frozen;
};

/// Solver effort accumulated over the cell solves of one tensor evaluation.
struct CellStats {
    int solves = 0;
    long cg_iterations = 0;
};

/// Corrected linears on the full micro lattice, for inspection in tests.
struct CellSolution {
    Mesh mesh;
    std::array<std::vector<double>, 2> phi; ///< nodal values of phi_1, phi_2
    SymMat2 tensor;
};

namespace detail {

inline void validate_cell_config(const CellConfig& config) {
    if (!(config.epsilon > 0.0))
        throw std::invalid_argument("cell problem: epsilon must be positive");
    if (!(config.delta >= config.epsilon))
        throw std::invalid_argument("cell problem: delta must be at least epsilon");
    if (config.micro_subdivisions < 2)
        throw std::invalid_argument("cell problem: need at least 2 subdivisions");
}

/// Vectors c_k with c_k . theta = integral of d theta / d x_k over the cell.
inline std::array<std::vector<double>, 2> gradient_mean_functionals(const FESpace& space,
                                                                    const QuadratureRule& rule) {
    std::array<std::vector<double>, 2> c;
    c[0].assign(static_cast<std::size_t>(space.dof_count()), 0.0);
    c[1].assign(static_cast<std::size_t>(space.dof_count()), 0.0);
    const Mesh& mesh = space.mesh();
    const int nd = space.dofs_per_element();
    const double area = mesh.element_area();
    std::array<Vec2, 9> grad{};
    std::array<int, 9> dofs{};
    for (int e = 0; e < mesh.element_count(); ++e) {
        space.element_dofs(e, std::span<int>(dofs.data(), static_cast<std::size_t>(nd)));
        for (int q = 0; q < rule.size(); ++q) {
            space.shape_gradients(rule.points[static_cast<std::size_t>(q)],
                                  std::span<Vec2>(grad.data(), static_cast<std::size_t>(nd)));
            const double w = rule.weights[static_cast<std::size_t>(q)] * area;
            for (int m = 0; m < nd; ++m) {
                c[0][static_cast<std::size_t>(dofs[m])] += w * grad[static_cast<std::size_t>(m)].x;
                c[1][static_cast<std::size_t>(dofs[m])] += w * grad[static_cast<std::size_t>(m)].y;
            }
        }
    }
    return c;
}

} // namespace detail

/**
 * @brief Solve the two cell problems of one sampling domain and upscale.
 *
 * Emits a warning to stderr when the micro mesh does not resolve the fast
 * scale (h >= epsilon). Tolerances tighter than the macro solves are
 * appropriate here because tensor errors enter every macro entry.
 */
inline CellSolution solve_cell_problems(const CellConfig& config, const TwoScaleCoefficient& coeff,
                                        const CgOptions& cg = {1e-12, 0},
                                        CellStats* stats = nullptr) {
    detail::validate_cell_config(config);
    const Vec2 xbar = config.macro_point;
    const double delta = config.delta;
    const int n = config.micro_subdivisions;
    const double h = delta / n;
    if (h >= config.epsilon)
        std::cerr << "warning: micro mesh width " << h << " does not resolve epsilon = "
                  << config.epsilon << "\n";

    CellSolution solution;
    solution.mesh = build_uniform_quad_mesh({xbar.x - 0.5 * delta, xbar.y - 0.5 * delta},
                                            {delta, delta}, {n, n});
    const Mesh& mesh = solution.mesh;
    const FESpace full(mesh, ElementOrder::q1, ConstraintKind::none);
    const int nf = full.dof_count();

    const CoefficientSampling sampling = config.sampling;
    const double inv_eps = 1.0 / config.epsilon;
    TensorField field{TensorField::Kind::oscillatory, [&](Vec2 x) {
                          const Vec2 slow = sampling == CoefficientSampling::frozen ? xbar : x;
                          return SymMat2::identity(coeff.value(slow, {x.x * inv_eps, x.y * inv_eps}));
                      }};
    const QuadratureRule rule = assembly_rule(ElementOrder::q1);
    const SparseMatrix a_full = assemble_stiffness(full, field, rule);

    // Nodal linears (x - xbar)_j and their energy residuals r_j = A phi_lin_j.
    std::array<std::vector<double>, 2> phi_lin;
    for (int j = 0; j < 2; ++j) phi_lin[j].assign(static_cast<std::size_t>(nf), 0.0);
    for (int d = 0; d < nf; ++d) {
        const Vec2 x = full.dof_coordinate(d);
        phi_lin[0][static_cast<std::size_t>(d)] = x.x - xbar.x;
        phi_lin[1][static_cast<std::size_t>(d)] = x.y - xbar.y;
    }
    std::array<std::vector<double>, 2> residual;
    for (int j = 0; j < 2; ++j) residual[j] = a_full.multiply(phi_lin[j]);

    auto count = [&stats](const CgResult& r) {
        if (stats) {
            stats->solves += 1;
            stats->cg_iterations += r.iterations;
        }
    };

    std::array<std::vector<double>, 2> theta;

    switch (config.coupling) {
    case CellCoupling::periodic: {
        const FESpace periodic(mesh, ElementOrder::q1, ConstraintKind::periodic);
        const int nr = periodic.dof_count();
        std::vector<Triplet> reduced_triplets = a_full.to_triplets();
        for (Triplet& t : reduced_triplets) {
            t.row = periodic.lattice_dof(t.row);
            t.col = periodic.lattice_dof(t.col);
        }
        SparseMatrix a_red = SparseMatrix::from_triplets(nr, nr, std::move(reduced_triplets));
        a_red.apply_dirichlet(periodic.constrained_dofs());
        for (int j = 0; j < 2; ++j) {
            std::vector<double> rhs(static_cast<std::size_t>(nr), 0.0);
            for (int d = 0; d < nf; ++d)
                rhs[static_cast<std::size_t>(periodic.lattice_dof(d))] -=
                    residual[j][static_cast<std::size_t>(d)];
            periodic.constrain_vector(rhs);
            std::vector<double> theta_red(static_cast<std::size_t>(nr), 0.0);
            count(solve_spd(a_red, rhs, theta_red, cg));
            theta[j].assign(static_cast<std::size_t>(nf), 0.0);
            for (int d = 0; d < nf; ++d)
                theta[j][static_cast<std::size_t>(d)] =
                    theta_red[static_cast<std::size_t>(periodic.lattice_dof(d))];
        }
        break;
    }
    case CellCoupling::dirichlet: {
        SparseMatrix a_sys = a_full;
        a_sys.apply_dirichlet(mesh.boundary_nodes);
        for (int j = 0; j < 2; ++j) {
            std::vector<double> rhs(static_cast<std::size_t>(nf));
            for (int d = 0; d < nf; ++d) rhs[static_cast<std::size_t>(d)] = -residual[j][static_cast<std::size_t>(d)];
            for (int d : mesh.boundary_nodes) rhs[static_cast<std::size_t>(d)] = 0.0;
            theta[j].assign(static_cast<std::size_t>(nf), 0.0);
            count(solve_spd(a_sys, rhs, theta[j], cg));
        }
        break;
    }
    case CellCoupling::neumann_mean_free: {
        // The pure natural problem is solved by theta = -(x - xbar)_j plus a
        // constant, which collapses the tensor. Enforcing a mean-free
        // gradient through two Lagrange multipliers removes that mode; the
        // multipliers are eliminated with a Schur complement, so only SPD
        // solves remain. One dof is pinned to fix the constant.
        SparseMatrix a_sys = a_full;
        const std::array<int, 1> pinned{0};
        a_sys.apply_dirichlet(pinned);
        auto constraints = detail::gradient_mean_functionals(full, rule);
        std::array<std::vector<double>, 2> w;
        for (int k = 0; k < 2; ++k) {
            std::vector<double> ck = constraints[k];
            ck[0] = 0.0;
            w[k].assign(static_cast<std::size_t>(nf), 0.0);
            count(solve_spd(a_sys, ck, w[k], cg));
        }
        std::array<std::array<double, 2>, 2> cw{};
        for (int k = 0; k < 2; ++k)
            for (int l = 0; l < 2; ++l)
                for (int d = 0; d < nf; ++d)
                    cw[k][l] += constraints[k][static_cast<std::size_t>(d)] * w[l][static_cast<std::size_t>(d)];
        const double det = cw[0][0] * cw[1][1] - cw[0][1] * cw[1][0];
        if (!(std::abs(det) > 0.0))
            throw std::runtime_error("cell problem: singular gradient-mean constraint system");
        for (int j = 0; j < 2; ++j) {
            std::vector<double> rhs(static_cast<std::size_t>(nf));
            for (int d = 0; d < nf; ++d) rhs[static_cast<std::size_t>(d)] = -residual[j][static_cast<std::size_t>(d)];
            rhs[0] = 0.0;
            std::vector<double> y(static_cast<std::size_t>(nf), 0.0);
            count(solve_spd(a_sys, rhs, y, cg));
            std::array<double, 2> cy{};
            for (int k = 0; k < 2; ++k)
                for (int d = 0; d < nf; ++d)
                    cy[k] += constraints[k][static_cast<std::size_t>(d)] * y[static_cast<std::size_t>(d)];
            const std::array<double, 2> eta{(cw[1][1] * cy[0] - cw[0][1] * cy[1]) / det,
                                            (cw[0][0] * cy[1] - cw[1][0] * cy[0]) / det};
            theta[j].assign(static_cast<std::size_t>(nf), 0.0);
            for (int d = 0; d < nf; ++d)
                theta[j][static_cast<std::size_t>(d)] =
                    y[static_cast<std::size_t>(d)] - eta[0] * w[0][static_cast<std::size_t>(d)] -
                    eta[1] * w[1][static_cast<std::size_t>(d)];
        }
        break;
    }
    }

    for (int j = 0; j < 2; ++j) {
        solution.phi[j].assign(static_cast<std::size_t>(nf), 0.0);
        for (int d = 0; d < nf; ++d)
            solution.phi[j][static_cast<std::size_t>(d)] =
                phi_lin[j][static_cast<std::size_t>(d)] + theta[j][static_cast<std::size_t>(d)];
    }

    const std::vector<double> v1 = a_full.multiply(solution.phi[0]);
    const std::vector<double> v2 = a_full.multiply(solution.phi[1]);
    double a11 = 0.0, a12 = 0.0, a22 = 0.0;
    for (int d = 0; d < nf; ++d) {
        a11 += solution.phi[0][static_cast<std::size_t>(d)] * v1[static_cast<std::size_t>(d)];
        a12 += solution.phi[0][static_cast<std::size_t>(d)] * v2[static_cast<std::size_t>(d)];
        a22 += solution.phi[1][static_cast<std::size_t>(d)] * v2[static_cast<std::size_t>(d)];
    }
    const double scale = 1.0 / (delta * delta);
    solution.tensor = {a11 * scale, a12 * scale, a22 * scale};
    return solution;
}

/// The upscaled tensor alone.
inline SymMat2 homogenized_tensor_hmm(const CellConfig& config, const TwoScaleCoefficient& coeff,
                                      const CgOptions& cg = {1e-12, 0},
                                      CellStats* stats = nullptr) {
    return solve_cell_problems(config, coeff, cg, stats).tensor;
}

/**
 * @brief Reference homogenized tensor of a layered coefficient a(y1).
 *
 * For a coefficient varying in y1 only, homogenization is one dimensional:
 * the tensor is diagonal with the harmonic mean across layers and the
 * arithmetic mean along them. Both period integrals are evaluated with a
 * composite Gauss rule.
 */
inline SymMat2 layered_reference_tensor(const std::function<double(double)>& profile,
                                        int panels = 64, int points_per_panel = 5) {
    if (panels < 1) throw std::invalid_argument("layered_reference_tensor: panels must be >= 1");
    const detail::Gauss1d rule = detail::gauss_1d(points_per_panel);
    double harmonic = 0.0;
    double arithmetic = 0.0;
    const double width = 1.0 / panels;
    for (int p = 0; p < panels; ++p)
        for (int q = 0; q < points_per_panel; ++q) {
            const double t = (p + rule.points[static_cast<std::size_t>(q)]) * width;
            const double w = rule.weights[static_cast<std::size_t>(q)] * width;
            const double a = profile(t);
            if (!(a > 0.0))
                throw std::runtime_error("layered_reference_tensor: profile must be positive");
            harmonic += w / a;
            arithmetic += w * a;
        }
    return SymMat2::diagonal(1.0 / harmonic, arithmetic);
}

/**
 * @brief Memoizing wrapper that turns cell solves into a TensorField.
 *
 * Tensors are cached per macro point (coordinates rounded to 1e-14 so that
 * points recomputed from identical arithmetic hit the cache). The cache is
 * guarded by a mutex and safe to share across assembly threads; the first
 * inserted value wins.
 */
class TensorCache {
public:
    bool lookup(Vec2 x, SymMat2& out) const {
        const Key key = make_key(x);
        std::lock_guard<std::mutex> lock(mutex_);
        const auto it = cache_.find(key);
        if (it == cache_.end()) return false;
        out = it->second;
        return true;
    }

    void insert(Vec2 x, const SymMat2& tensor) {
        const Key key = make_key(x);
        std::lock_guard<std::mutex> lock(mutex_);
        cache_.emplace(key, tensor);
    }

    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return cache_.size();
    }

private:
    using Key = std::pair<std::int64_t, std::int64_t>;

    static Key make_key(Vec2 x) {
        return {static_cast<std::int64_t>(std::llround(x.x * 1e14)),
                static_cast<std::int64_t>(std::llround(x.y * 1e14))};
    }

    mutable std::mutex mutex_;
    std::map<Key, SymMat2> cache_;
};

/**
 * @brief TensorField that evaluates a cell problem at every requested point.
 *
 * @param cell_template cell geometry and coupling; macro_point is replaced by
 *        the evaluation point
 * @param cache optional shared memoization; pass nullptr to recompute
 * @param stats optional accumulated solver effort (counts cache misses only)
 */
inline TensorField make_hmm_field(CellConfig cell_template, TwoScaleCoefficient coeff,
                                  TensorCache* cache = nullptr, CgOptions cg = {1e-12, 0},
                                  CellStats* stats = nullptr) {
    return {TensorField::Kind::hmm, [=](Vec2 x) {
                SymMat2 tensor;
                if (cache && cache->lookup(x, tensor)) return tensor;
                CellConfig config = cell_template;
                config.macro_point = x;
                tensor = homogenized_tensor_hmm(config, coeff, cg, stats);
                if (cache) cache->insert(x, tensor);
                return tensor;
            }};
}

} // namespace hmmwave
