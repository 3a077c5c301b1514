// SPDX-License-Identifier: Apache-2.0

/**
 * @file study.hpp
 * @brief Convergence-study engine: space, time and micro refinement sweeps
 *        over the benchmark problem, with rate estimation and CSV output.
 *
 * Every study is deterministic: dof ordering, reduction order and thread
 * partitioning are fixed, so rerunning a configuration reproduces the CSV
 * bitwise (timings excluded; disable them for bit-identical files).
 */

#pragma once

#include "hmmwave/assembly.hpp"
#include "hmmwave/fe_space.hpp"
#include "hmmwave/integrators.hpp"
#include "hmmwave/micro.hpp"
#include "hmmwave/model.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace hmmwave {

enum class StudyKind { space, time, micro, plateau };
enum class TensorSource { exact, hmm };
enum class TimeReference { exact, reference, both };

inline const char* to_string(StudyKind k) {
    switch (k) {
    case StudyKind::space: return "space";
    case StudyKind::time: return "time";
    case StudyKind::micro: return "micro";
    default: return "plateau";
    }
}

inline const char* to_string(TensorSource s) {
    return s == TensorSource::exact ? "exact" : "hmm";
}

inline const char* to_string(TimeReference r) {
    switch (r) {
    case TimeReference::exact: return "exact";
    case TimeReference::reference: return "reference";
    default: return "both";
    }
}

/// Full description of one study run; round-trips through the config format.
struct StudyConfig {
    StudyKind kind = StudyKind::space;
    std::vector<Scheme> schemes{Scheme::imex};
    int order = 1; ///< macro element order p (1 or 2)

    std::vector<int> mesh_levels{2, 3, 4, 5}; ///< H = 2^-level (space studies)
    int time_mesh_level = 5;                  ///< fixed mesh for time studies
    double tau = 1e-3;                        ///< fixed step for space studies
    std::vector<double> tau_list;             ///< time sweep; empty = T * 2^-4 .. 2^-9
    double tau_ref = 0.0;                     ///< reference step; 0 = T * 2^-12
    TimeReference reference = TimeReference::both;

    TensorSource tensor = TensorSource::exact;
    double epsilon = 1.0 / 128.0;
    double delta = 1.0 / 32.0;
    int micro_subdivisions = 8;                 ///< micro mesh in macro assembly
    std::vector<int> micro_sweep{16, 32, 64, 128}; ///< micro study sweep
    CellCoupling coupling = CellCoupling::periodic;
    CoefficientSampling sampling = CoefficientSampling::frozen;
    Vec2 micro_point{0.25, 0.25};

    double final_time = 1.0;
    double cg_tolerance = 1e-12;
    double fp_tolerance = 1e-10;
    int fp_max_iterations = 200;
    double divergence_threshold = 1e30;
    int threads = 1; ///< 0 = machine default
    bool literal_nonlinearity = false;
    bool emit_timings = true;

    bool operator==(const StudyConfig&) const = default;

    void validate() const {
        if (schemes.empty()) throw std::invalid_argument("StudyConfig: schemes must be nonempty");
        if (order != 1 && order != 2) throw std::invalid_argument("StudyConfig: order must be 1 or 2");
        if (mesh_levels.empty()) throw std::invalid_argument("StudyConfig: mesh_levels must be nonempty");
        for (int l : mesh_levels)
            if (l < 1 || l > 12) throw std::invalid_argument("StudyConfig: mesh levels must lie in 1..12");
        if (time_mesh_level < 1 || time_mesh_level > 12)
            throw std::invalid_argument("StudyConfig: time_mesh_level must lie in 1..12");
        if (!(tau > 0.0)) throw std::invalid_argument("StudyConfig: tau must be positive");
        for (double t : tau_list)
            if (!(t > 0.0)) throw std::invalid_argument("StudyConfig: tau values must be positive");
        if (micro_sweep.empty()) throw std::invalid_argument("StudyConfig: micro_sweep must be nonempty");
        if (!(epsilon > 0.0) || !(delta > 0.0))
            throw std::invalid_argument("StudyConfig: epsilon and delta must be positive");
        if (micro_subdivisions < 2)
            throw std::invalid_argument("StudyConfig: micro_subdivisions must be at least 2");
        if (!(final_time > 0.0)) throw std::invalid_argument("StudyConfig: final_time must be positive");
        if (!(cg_tolerance > 0.0) || !(fp_tolerance > 0.0))
            throw std::invalid_argument("StudyConfig: tolerances must be positive");
        if (fp_max_iterations < 1)
            throw std::invalid_argument("StudyConfig: fp_max_iterations must be at least 1");
        if (threads < 0) throw std::invalid_argument("StudyConfig: threads must be >= 0");
        if (kind == StudyKind::plateau && tensor != TensorSource::hmm)
            throw std::invalid_argument("StudyConfig: plateau studies require the hmm tensor source");
    }

    ProblemSpec problem() const {
        ProblemSpec spec;
        spec.epsilon = epsilon;
        spec.final_time = final_time;
        spec.literal_shift_inside_abs = literal_nonlinearity;
        return spec;
    }

    int resolved_threads() const {
        if (threads > 0) return threads;
        const unsigned hw = std::thread::hardware_concurrency();
        return hw > 0 ? static_cast<int>(hw) : 1;
    }
};

/// One CSV row; empty optionals are emitted as empty fields.
struct StudyRow {
    std::string study;
    std::string scheme;
    std::optional<int> p;
    std::optional<double> H;
    std::optional<double> tau;
    std::optional<double> eps;
    std::optional<double> delta;
    std::optional<int> micro_n;
    std::string coupling;
    std::string mode;
    std::optional<double> err_u_h1;
    std::optional<double> err_v_l2;
    std::optional<double> e_total;
    std::optional<double> rate;
    bool diverged = false;
    long wall_ms = 0;
    long cg_iters = 0;
};

struct StudyResult {
    std::vector<StudyRow> rows;
};

/**
 * @brief rate_i = log(e_i / e_{i+1}) / log(p_i / p_{i+1}) for consecutive pairs.
 *
 * @throws std::invalid_argument on length mismatch, fewer than two entries,
 *         non-positive values, or non-decreasing parameters
 */
inline std::vector<double> estimate_rates(std::span<const double> errors,
                                          std::span<const double> parameters) {
    if (errors.size() != parameters.size())
        throw std::invalid_argument("estimate_rates: length mismatch");
    if (errors.size() < 2) throw std::invalid_argument("estimate_rates: need at least two entries");
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!(errors[i] > 0.0)) throw std::invalid_argument("estimate_rates: errors must be positive");
        if (!(parameters[i] > 0.0))
            throw std::invalid_argument("estimate_rates: parameters must be positive");
        if (i > 0 && !(parameters[i] < parameters[i - 1]))
            throw std::invalid_argument("estimate_rates: parameters must be strictly decreasing");
    }
    std::vector<double> rates;
    rates.reserve(errors.size() - 1);
    for (std::size_t i = 0; i + 1 < errors.size(); ++i)
        rates.push_back(std::log(errors[i] / errors[i + 1]) /
                        std::log(parameters[i] / parameters[i + 1]));
    return rates;
}

/// Absolute errors and the relative error functional at one time.
struct ErrorBreakdown {
    double err_u_h1 = 0.0;
    double err_v_l2 = 0.0;
    double e_total = 0.0;
};

namespace detail {

inline constexpr double denominator_floor = 1e-14;

} // namespace detail

/**
 * @brief Relative error functional against the exact solution:
 *        (H1 error of u + L2 error of v) / (H1 norm of u + L2 norm of v).
 */
inline ErrorBreakdown exact_error_breakdown(const FESpace& space, std::span<const double> mu,
                                            std::span<const double> nu, double t) {
    const QuadratureRule rule = error_norm_rule(space.order());
    auto u = [t](Vec2 x) { return exact_solution(t, x); };
    auto du = [t](Vec2 x) { return exact_gradient(t, x); };
    auto v = [t](Vec2 x) { return exact_velocity(t, x); };
    auto dv = [t](Vec2 x) { return exact_gradient(t, x) * std::numbers::pi; };

    ErrorBreakdown out;
    out.err_u_h1 = error_norms(space, mu, u, du, rule).h1();
    out.err_v_l2 = error_norms(space, nu, v, dv, rule).l2;

    const std::vector<double> zeros(static_cast<std::size_t>(space.dof_count()), 0.0);
    const double norm_u = error_norms(space, zeros, u, du, rule).h1();
    const double norm_v = error_norms(space, zeros, v, dv, rule).l2;
    const double denom = norm_u + norm_v;
    if (denom < detail::denominator_floor)
        throw std::runtime_error("error functional: exact solution norm vanishes");
    out.e_total = (out.err_u_h1 + out.err_v_l2) / denom;
    return out;
}

/// The relative error functional alone.
inline double error_functional(const FESpace& space, std::span<const double> mu,
                               std::span<const double> nu, double t) {
    return exact_error_breakdown(space, mu, nu, t).e_total;
}

/**
 * @brief Error functional against a discrete reference on the same space.
 *
 * Uses exact matrix norms (e' (K + M) e and e' M e with the
 * identity-coefficient stiffness K), so no quadrature error enters.
 */
inline ErrorBreakdown reference_error_breakdown(const SparseMatrix& stiffness_id,
                                                const SparseMatrix& mass, const State& state,
                                                const State& reference) {
    const std::size_t n = state.mu.size();
    std::vector<double> e(n), tmp(n);
    auto h1_norm = [&](std::span<const double> w) {
        stiffness_id.multiply(w, tmp);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += w[i] * tmp[i];
        mass.multiply(w, tmp);
        for (std::size_t i = 0; i < n; ++i) s += w[i] * tmp[i];
        return std::sqrt(s);
    };
    auto l2_norm = [&](std::span<const double> w) {
        mass.multiply(w, tmp);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += w[i] * tmp[i];
        return std::sqrt(s);
    };

    ErrorBreakdown out;
    for (std::size_t i = 0; i < n; ++i) e[i] = state.mu[i] - reference.mu[i];
    out.err_u_h1 = h1_norm(e);
    for (std::size_t i = 0; i < n; ++i) e[i] = state.nu[i] - reference.nu[i];
    out.err_v_l2 = l2_norm(e);
    const double denom = h1_norm(reference.mu) + l2_norm(reference.nu);
    if (denom < detail::denominator_floor)
        throw std::runtime_error("error functional: reference solution norm vanishes");
    out.e_total = (out.err_u_h1 + out.err_v_l2) / denom;
    return out;
}

namespace detail {

inline long elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                 start)
        .count();
}

/// Fill rate fields over one series of rows sharing a parameter axis.
inline void fill_rates(std::vector<StudyRow>& rows, std::size_t first, std::size_t count,
                       const std::vector<double>& parameters) {
    for (std::size_t i = 1; i < count; ++i) {
        StudyRow& row = rows[first + i];
        const StudyRow& prev = rows[first + i - 1];
        if (!prev.e_total || !row.e_total) continue;
        const double e0 = *prev.e_total;
        const double e1 = *row.e_total;
        if (!(e0 > 0.0) || !(e1 > 0.0) || !std::isfinite(e0) || !std::isfinite(e1)) continue;
        row.rate = std::log(e0 / e1) / std::log(parameters[i - 1] / parameters[i]);
    }
}

inline TensorField make_study_field(const StudyConfig& config, const TwoScaleCoefficient& coeff,
                                    TensorCache* cache, CellStats* stats) {
    if (config.tensor == TensorSource::exact) return exact_homogenized_field();
    CellConfig cell;
    cell.delta = config.delta;
    cell.epsilon = config.epsilon;
    cell.micro_subdivisions = config.micro_subdivisions;
    cell.coupling = config.coupling;
    cell.sampling = config.sampling;
    return make_hmm_field(cell, coeff, cache, {1e-12, 0}, stats);
}

inline void fill_hmm_columns(StudyRow& row, const StudyConfig& config) {
    if (config.tensor != TensorSource::hmm) return;
    row.eps = config.epsilon;
    row.delta = config.delta;
    row.micro_n = config.micro_subdivisions;
    row.coupling = to_string(config.coupling);
    row.mode = to_string(config.sampling);
}

inline IntegrateOptions integrate_options(const StudyConfig& config) {
    IntegrateOptions opts;
    opts.cg = {config.cg_tolerance, 0};
    opts.fp_tolerance = config.fp_tolerance;
    opts.fp_max_iterations = config.fp_max_iterations;
    opts.divergence_threshold = config.divergence_threshold;
    return opts;
}

} // namespace detail

/**
 * @brief Space refinement sweep at fixed tau; also drives plateau studies
 *        (the same sweep with multiscale tensors at coarse micro resolution).
 */
inline StudyResult run_space_study(const StudyConfig& config) {
    config.validate();
    if (config.kind != StudyKind::space && config.kind != StudyKind::plateau)
        throw std::invalid_argument("run_space_study: config kind must be space or plateau");
    const ProblemSpec spec = config.problem();
    const Scheme scheme = config.schemes.front();
    const IntegrateOptions opts = detail::integrate_options(config);
    const TwoScaleCoefficient coeff = two_scale_coefficient(spec);

    StudyResult result;
    std::vector<double> mesh_widths;
    for (int level : config.mesh_levels) {
        const auto start = std::chrono::steady_clock::now();
        const int n = 1 << level;
        const Mesh mesh = build_uniform_quad_mesh({0.0, 0.0}, {1.0, 1.0}, {n, n});
        const FESpace space(mesh, config.order == 1 ? ElementOrder::q1 : ElementOrder::q2,
                            ConstraintKind::dirichlet);

        TensorCache cache;
        CellStats cell_stats;
        const TensorField field = detail::make_study_field(config, coeff, &cache, &cell_stats);
        const SystemOperators ops = make_wave_operators(spec, space, field, assembly_rule(space.order()),
                                                        config.resolved_threads());
        const IntegrationResult run =
            integrate(initial_state(spec, space), ops, scheme, config.tau, spec.final_time, opts);

        StudyRow row;
        row.study = to_string(config.kind);
        row.scheme = to_string(scheme);
        row.p = config.order;
        row.H = 1.0 / n;
        row.tau = config.tau;
        detail::fill_hmm_columns(row, config);
        row.diverged = run.diverged;
        if (run.diverged) {
            row.err_u_h1 = row.err_v_l2 = row.e_total = std::numeric_limits<double>::infinity();
        } else {
            const ErrorBreakdown eb =
                exact_error_breakdown(space, run.state.mu, run.state.nu, spec.final_time);
            row.err_u_h1 = eb.err_u_h1;
            row.err_v_l2 = eb.err_v_l2;
            row.e_total = eb.e_total;
        }
        row.cg_iters = run.counters.cg_iterations + cell_stats.cg_iterations;
        row.wall_ms = config.emit_timings ? detail::elapsed_ms(start) : 0;
        result.rows.push_back(std::move(row));
        mesh_widths.push_back(1.0 / n);
    }
    detail::fill_rates(result.rows, 0, result.rows.size(), mesh_widths);
    return result;
}

/**
 * @brief Time refinement sweep on a fixed mesh, per scheme.
 *
 * Errors are measured against the exact solution (rows tagged "time", which
 * plateau at the spatial error) and against a fine-step reference trajectory
 * on the same mesh (rows tagged "time-ref", which isolate the temporal
 * order), as selected by config.reference. The reference is computed once
 * with the semi-implicit scheme at tau_ref.
 */
inline StudyResult run_time_study(const StudyConfig& config) {
    config.validate();
    if (config.kind != StudyKind::time)
        throw std::invalid_argument("run_time_study: config kind must be time");
    const ProblemSpec spec = config.problem();
    const double T = spec.final_time;
    const IntegrateOptions opts = detail::integrate_options(config);
    const TwoScaleCoefficient coeff = two_scale_coefficient(spec);

    std::vector<double> taus = config.tau_list;
    if (taus.empty())
        for (int k = 4; k <= 9; ++k) taus.push_back(T / static_cast<double>(1 << k));
    const double tau_ref = config.tau_ref > 0.0 ? config.tau_ref : T / 4096.0;

    const int n = 1 << config.time_mesh_level;
    const Mesh mesh = build_uniform_quad_mesh({0.0, 0.0}, {1.0, 1.0}, {n, n});
    const FESpace space(mesh, config.order == 1 ? ElementOrder::q1 : ElementOrder::q2,
                        ConstraintKind::dirichlet);

    TensorCache cache;
    CellStats cell_stats;
    const TensorField field = detail::make_study_field(config, coeff, &cache, &cell_stats);
    const SystemOperators ops = make_wave_operators(spec, space, field, assembly_rule(space.order()),
                                                    config.resolved_threads());
    const State start_state = initial_state(spec, space);

    const bool want_exact =
        config.reference == TimeReference::exact || config.reference == TimeReference::both;
    const bool want_reference =
        config.reference == TimeReference::reference || config.reference == TimeReference::both;

    // Matrix norms for discrete reference errors (unconstrained, so no unit
    // diagonal pollutes them; difference vectors vanish on the boundary).
    const QuadratureRule rule = assembly_rule(space.order());
    const SparseMatrix mass_norm = assemble_mass(space, rule);
    const SparseMatrix stiffness_norm = assemble_stiffness(space, make_constant_field(1.0), rule);

    State reference;
    if (want_reference) {
        IntegrationResult ref = integrate(start_state, ops, Scheme::imex, tau_ref, T, opts);
        if (ref.diverged)
            throw std::runtime_error("time study: the reference integration diverged");
        reference = std::move(ref.state);
    }

    StudyResult result;
    for (Scheme scheme : config.schemes) {
        std::vector<StudyRow> exact_rows, ref_rows;
        for (double tau : taus) {
            const auto start = std::chrono::steady_clock::now();
            const IntegrationResult run = integrate(start_state, ops, scheme, tau, T, opts);
            const long wall = config.emit_timings ? detail::elapsed_ms(start) : 0;

            StudyRow base;
            base.scheme = to_string(scheme);
            base.p = config.order;
            base.H = 1.0 / n;
            base.tau = tau;
            detail::fill_hmm_columns(base, config);
            base.diverged = run.diverged;
            base.wall_ms = wall;
            base.cg_iters = run.counters.cg_iterations;

            if (want_exact) {
                StudyRow row = base;
                row.study = "time";
                if (run.diverged) {
                    row.err_u_h1 = row.err_v_l2 = row.e_total =
                        std::numeric_limits<double>::infinity();
                } else {
                    const ErrorBreakdown eb =
                        exact_error_breakdown(space, run.state.mu, run.state.nu, T);
                    row.err_u_h1 = eb.err_u_h1;
                    row.err_v_l2 = eb.err_v_l2;
                    row.e_total = eb.e_total;
                }
                exact_rows.push_back(std::move(row));
            }
            if (want_reference) {
                StudyRow row = base;
                row.study = "time-ref";
                if (run.diverged) {
                    row.err_u_h1 = row.err_v_l2 = row.e_total =
                        std::numeric_limits<double>::infinity();
                } else {
                    const ErrorBreakdown eb =
                        reference_error_breakdown(stiffness_norm, mass_norm, run.state, reference);
                    row.err_u_h1 = eb.err_u_h1;
                    row.err_v_l2 = eb.err_v_l2;
                    row.e_total = eb.e_total;
                }
                ref_rows.push_back(std::move(row));
            }
        }
        for (std::vector<StudyRow>* series : {&exact_rows, &ref_rows}) {
            if (series->empty()) continue;
            const std::size_t first = result.rows.size();
            for (StudyRow& row : *series) result.rows.push_back(std::move(row));
            detail::fill_rates(result.rows, first, taus.size(), taus);
        }
    }
    return result;
}

/**
 * @brief Micro refinement sweep: cell tensor error at a fixed macro point.
 *
 * Reports the Frobenius distance of the upscaled tensor to the closed-form
 * effective tensor as the micro mesh is refined; the rate is measured
 * against the micro mesh width h = delta / micro_n.
 */
inline StudyResult run_micro_study(const StudyConfig& config) {
    config.validate();
    if (config.kind != StudyKind::micro)
        throw std::invalid_argument("run_micro_study: config kind must be micro");
    const ProblemSpec spec = config.problem();
    const TwoScaleCoefficient coeff = two_scale_coefficient(spec);
    const SymMat2 exact = homogenized_tensor_exact(config.micro_point.x);

    StudyResult result;
    std::vector<double> widths;
    for (int micro_n : config.micro_sweep) {
        const auto start = std::chrono::steady_clock::now();
        CellConfig cell;
        cell.macro_point = config.micro_point;
        cell.delta = config.delta;
        cell.epsilon = config.epsilon;
        cell.micro_subdivisions = micro_n;
        cell.coupling = config.coupling;
        cell.sampling = config.sampling;

        CellStats stats;
        const SymMat2 tensor = homogenized_tensor_hmm(cell, coeff, {1e-12, 0}, &stats);

        StudyRow row;
        row.study = to_string(config.kind);
        row.eps = config.epsilon;
        row.delta = config.delta;
        row.micro_n = micro_n;
        row.coupling = to_string(config.coupling);
        row.mode = to_string(config.sampling);
        row.e_total = frobenius_distance(tensor, exact);
        row.cg_iters = stats.cg_iterations;
        row.wall_ms = config.emit_timings ? detail::elapsed_ms(start) : 0;
        result.rows.push_back(std::move(row));
        widths.push_back(config.delta / micro_n);
    }
    detail::fill_rates(result.rows, 0, result.rows.size(), widths);
    return result;
}

/// Dispatch on config.kind.
inline StudyResult run_study(const StudyConfig& config) {
    switch (config.kind) {
    case StudyKind::space:
    case StudyKind::plateau: return run_space_study(config);
    case StudyKind::time: return run_time_study(config);
    default: return run_micro_study(config);
    }
}

/// Shortest decimal that round-trips to the same double ("inf" for infinities).
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
    char buffer[32];
    const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), v);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return {buffer, end};
}

inline constexpr const char* csv_header =
    "study,scheme,p,H,tau,eps,delta,micro_n,coupling,mode,"
    "err_u_H1,err_v_L2,E_total,rate,diverged,wall_ms,cg_iters";

inline std::string to_csv(const StudyResult& result) {
    std::string out = csv_header;
    out += '\n';
    auto opt_double = [](const std::optional<double>& v) {
        return v ? format_double(*v) : std::string{};
    };
    auto opt_int = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string{}; };
    for (const StudyRow& row : result.rows) {
        out += row.study;
        out += ',';
        out += row.scheme;
        out += ',';
        out += opt_int(row.p);
        out += ',';
        out += opt_double(row.H);
        out += ',';
        out += opt_double(row.tau);
        out += ',';
        out += opt_double(row.eps);
        out += ',';
        out += opt_double(row.delta);
        out += ',';
        out += opt_int(row.micro_n);
        out += ',';
        out += row.coupling;
        out += ',';
        out += row.mode;
        out += ',';
        out += opt_double(row.err_u_h1);
        out += ',';
        out += opt_double(row.err_v_l2);
        out += ',';
        out += opt_double(row.e_total);
        out += ',';
        out += opt_double(row.rate);
        out += ',';
        out += row.diverged ? '1' : '0';
        out += ',';
        out += std::to_string(row.wall_ms);
        out += ',';
        out += std::to_string(row.cg_iters);
        out += '\n';
    }
    return out;
}

/// Write a file atomically: temp file in the same directory, then rename.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream stream(tmp, std::ios::binary | std::ios::trunc);
        if (!stream) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        stream << content;
        if (!stream) throw std::runtime_error("write to " + tmp.string() + " failed");
    }
    std::filesystem::rename(tmp, path);
}

inline void write_csv(const StudyResult& result, const std::filesystem::path& path) {
    write_text_atomic(path, to_csv(result));
}

} // namespace hmmwave
