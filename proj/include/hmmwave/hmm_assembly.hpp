// SPDX-License-Identifier: Apache-2.0

/**
 * @file hmm_assembly.hpp
 * @brief Macro stiffness assembly driven by per-quadrature-point cell solves.
 *
 * The tensor evaluations dominate the cost, so they are precomputed for all
 * (element, quadrature point) slots with a thread pool and the triplet
 * assembly itself stays serial. Results are deterministic for any thread
 * count because each slot writes its own entry.
 */

#pragma once

#include "hmmwave/assembly.hpp"
#include "hmmwave/fe_space.hpp"
#include "hmmwave/quadrature.hpp"
#include "hmmwave/sparse.hpp"
#include "hmmwave/tensor_field.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace hmmwave {

/**
 * @brief Run fn(i) for i in [0, count) on up to @p threads workers.
 *
 * Indices are dealt round-robin through an atomic counter. The first
 * exception thrown by any worker is rethrown on the calling thread after all
 * workers have stopped.
 */
inline void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    threads = std::max(1, threads);
    if (threads == 1 || count <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        while (!failed.load(std::memory_order_relaxed)) {
            const int i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int workers = std::min(threads, count);
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

/**
 * @brief Stiffness matrix with the tensor field evaluated at every
 *        quadrature point, evaluations spread over @p threads.
 *
 * Equivalent to assemble_stiffness for cheap fields; intended for fields
 * whose evaluation solves cell problems.
 */
inline SparseMatrix assemble_stiffness_parallel(const FESpace& space, const TensorField& field,
                                                const QuadratureRule& rule, int threads = 1) {
    const int ne = space.mesh().element_count();
    const int nq = rule.size();
    const Mesh& mesh = space.mesh();
    std::vector<SymMat2> tensors(static_cast<std::size_t>(ne) * static_cast<std::size_t>(nq));

    parallel_for(ne * nq, threads, [&](int slot) {
        const int e = slot / nq;
        const int q = slot % nq;
        const Vec2 corner = mesh.element_origin(e);
        const Vec2 ref = rule.points[static_cast<std::size_t>(q)];
        const Vec2 x{corner.x + ref.x * mesh.element_width(),
                     corner.y + ref.y * mesh.element_height()};
        tensors[static_cast<std::size_t>(slot)] = field.evaluate(x);
    });

    return detail::assemble_stiffness_impl(space, rule, [&tensors, nq](int e, int q, Vec2) {
        return tensors[static_cast<std::size_t>(e) * static_cast<std::size_t>(nq) +
                       static_cast<std::size_t>(q)];
    });
}

} // namespace hmmwave
