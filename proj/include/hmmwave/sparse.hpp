// SPDX-License-Identifier: Apache-2.0

/**
 * @file sparse.hpp
 * @brief Compressed-sparse-row matrices and a Jacobi-preconditioned
 *        conjugate-gradient solver for symmetric positive definite systems.
 *
 * Everything here is deterministic: assembly from triplets sorts by (row,
 * column) and sums duplicates in a fixed order, and CG performs its
 * reductions in index order, so repeated runs are bitwise reproducible.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hmmwave {

struct Triplet {
    int row = 0;
    int col = 0;
    double value = 0.0;
};

/// Thrown when an iterative solver fails to reach its tolerance.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, int iterations, double residual)
        : std::runtime_error(what), iterations(iterations), relative_residual(residual) {}

    int iterations;
    double relative_residual;
};

/// Square or rectangular sparse matrix in CSR layout with sorted columns.
class SparseMatrix {
public:
    SparseMatrix() = default;

    static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> triplets) {
        if (rows < 0 || cols < 0)
            throw std::invalid_argument("SparseMatrix: negative dimensions");
        for (const Triplet& t : triplets)
            if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
                throw std::invalid_argument("SparseMatrix: triplet index out of range");

        std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });

        SparseMatrix m;
        m.rows_ = rows;
        m.cols_ = cols;
        m.row_ptr_.assign(static_cast<std::size_t>(rows) + 1, 0);
        m.col_idx_.reserve(triplets.size());
        m.values_.reserve(triplets.size());

        std::size_t i = 0;
        while (i < triplets.size()) {
            const int r = triplets[i].row;
            const int c = triplets[i].col;
            double sum = 0.0;
            while (i < triplets.size() && triplets[i].row == r && triplets[i].col == c)
                sum += triplets[i++].value;
            m.col_idx_.push_back(c);
            m.values_.push_back(sum);
            m.row_ptr_[static_cast<std::size_t>(r) + 1] = m.col_idx_.size();
        }
        for (std::size_t r = 1; r < m.row_ptr_.size(); ++r)
            m.row_ptr_[r] = std::max(m.row_ptr_[r], m.row_ptr_[r - 1]);
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t nonzeros() const { return values_.size(); }

    /// y = A x
    void multiply(std::span<const double> x, std::span<double> y) const {
        if (static_cast<int>(x.size()) != cols_ || static_cast<int>(y.size()) != rows_)
            throw std::invalid_argument("SparseMatrix::multiply: size mismatch");
        for (int r = 0; r < rows_; ++r) {
            double sum = 0.0;
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[static_cast<std::size_t>(r) + 1]; ++k)
                sum += values_[k] * x[static_cast<std::size_t>(col_idx_[k])];
            y[static_cast<std::size_t>(r)] = sum;
        }
    }

    std::vector<double> multiply(std::span<const double> x) const {
        std::vector<double> y(static_cast<std::size_t>(rows_));
        multiply(x, y);
        return y;
    }

    double coeff(int row, int col) const {
        for (std::size_t k = row_ptr_[row]; k < row_ptr_[static_cast<std::size_t>(row) + 1]; ++k)
            if (col_idx_[k] == col) return values_[k];
        return 0.0;
    }

    std::vector<double> diagonal() const {
        std::vector<double> d(static_cast<std::size_t>(std::min(rows_, cols_)), 0.0);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = coeff(static_cast<int>(i), static_cast<int>(i));
        return d;
    }

    /// Largest |A_ij - A_ji| over the stored pattern; 0 for a symmetric matrix.
    double symmetry_defect() const {
        double defect = 0.0;
        for (int r = 0; r < rows_; ++r)
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[static_cast<std::size_t>(r) + 1]; ++k)
                defect = std::max(defect, std::abs(values_[k] - coeff(col_idx_[k], r)));
        return defect;
    }

    /**
     * @brief Eliminate dofs symmetrically for homogeneous essential constraints.
     *
     * Constrained rows and columns are zeroed and the diagonal set to 1, so
     * the matrix remains SPD and constrained solution entries reproduce the
     * right-hand side (which callers zero for homogeneous data).
     */
    void apply_dirichlet(std::span<const int> dofs) {
        std::vector<char> mask(static_cast<std::size_t>(rows_), 0);
        for (int d : dofs) {
            if (d < 0 || d >= rows_ || d >= cols_)
                throw std::invalid_argument("apply_dirichlet: dof out of range");
            mask[static_cast<std::size_t>(d)] = 1;
        }
        for (int r = 0; r < rows_; ++r) {
            const bool row_constrained = mask[static_cast<std::size_t>(r)] != 0;
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[static_cast<std::size_t>(r) + 1]; ++k) {
                const bool col_constrained = mask[static_cast<std::size_t>(col_idx_[k])] != 0;
                if (row_constrained || col_constrained)
                    values_[k] = (r == col_idx_[k]) ? 1.0 : 0.0;
            }
        }
    }

    /// All stored entries and the raw CSR arrays, for linear combinations.
    std::vector<Triplet> to_triplets() const {
        std::vector<Triplet> t;
        t.reserve(values_.size());
        for (int r = 0; r < rows_; ++r)
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[static_cast<std::size_t>(r) + 1]; ++k)
                t.push_back({r, col_idx_[k], values_[k]});
        return t;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<int> col_idx_;
    std::vector<double> values_;
};

/// c0*A0 + c1*A1 + ... over matrices of equal shape.
inline SparseMatrix linear_combination(
    std::span<const std::pair<double, const SparseMatrix*>> terms) {
    if (terms.empty()) throw std::invalid_argument("linear_combination: no terms");
    const int rows = terms[0].second->rows();
    const int cols = terms[0].second->cols();
    std::vector<Triplet> all;
    for (const auto& [scale, matrix] : terms) {
        if (matrix->rows() != rows || matrix->cols() != cols)
            throw std::invalid_argument("linear_combination: shape mismatch");
        for (Triplet t : matrix->to_triplets()) {
            t.value *= scale;
            all.push_back(t);
        }
    }
    return SparseMatrix::from_triplets(rows, cols, std::move(all));
}

struct CgOptions {
    double tolerance = 1e-10; ///< relative residual target
    int max_iterations = 0;   ///< 0 means 10 * dimension
};

struct CgResult {
    int iterations = 0;
    double relative_residual = 0.0;
};

/**
 * @brief Solve A x = b for SPD A with Jacobi-preconditioned CG.
 *
 * @param x in: initial guess, out: solution
 * @throws SolverError if the relative residual target is not met within the
 *         iteration budget
 */
inline CgResult solve_spd(const SparseMatrix& A, std::span<const double> b,
                          std::span<double> x, const CgOptions& options = {}) {
    const int n = A.rows();
    if (A.cols() != n) throw std::invalid_argument("solve_spd: matrix must be square");
    if (static_cast<int>(b.size()) != n || static_cast<int>(x.size()) != n)
        throw std::invalid_argument("solve_spd: vector size mismatch");

    const int max_it = options.max_iterations > 0 ? options.max_iterations : 10 * std::max(n, 1);

    double b_norm2 = 0.0;
    for (double v : b) b_norm2 += v * v;
    const double b_norm = std::sqrt(b_norm2);
    if (b_norm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return {0, 0.0};
    }

    std::vector<double> inv_diag = A.diagonal();
    for (double& d : inv_diag) {
        if (!(d > 0.0))
            throw std::invalid_argument("solve_spd: nonpositive diagonal entry");
        d = 1.0 / d;
    }

    std::vector<double> r(static_cast<std::size_t>(n));
    A.multiply(x, r);
    for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];

    std::vector<double> z(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    std::vector<double> p = z;
    std::vector<double> Ap(static_cast<std::size_t>(n));

    double rz = 0.0;
    for (int i = 0; i < n; ++i) rz += r[i] * z[i];

    double res_norm = 0.0;
    for (double v : r) res_norm += v * v;
    res_norm = std::sqrt(res_norm);

    int it = 0;
    while (res_norm > options.tolerance * b_norm) {
        if (it >= max_it)
            throw SolverError("solve_spd: CG did not converge (relative residual " +
                                  std::to_string(res_norm / b_norm) + " after " +
                                  std::to_string(it) + " iterations)",
                              it, res_norm / b_norm);
        A.multiply(p, Ap);
        double pAp = 0.0;
        for (int i = 0; i < n; ++i) pAp += p[i] * Ap[i];
        if (!(pAp > 0.0))
            throw SolverError("solve_spd: matrix is not positive definite", it,
                              res_norm / b_norm);
        const double alpha = rz / pAp;
        for (int i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * Ap[i];
        }
        for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
        double rz_next = 0.0;
        for (int i = 0; i < n; ++i) rz_next += r[i] * z[i];
        const double beta = rz_next / rz;
        rz = rz_next;
        for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        res_norm = 0.0;
        for (double v : r) res_norm += v * v;
        res_norm = std::sqrt(res_norm);
        ++it;
    }
    return {it, res_norm / b_norm};
}

} // namespace hmmwave
