// SPDX-License-Identifier: Apache-2.0

/**
 * @file hmmwave_cli.cpp
 * @brief Command-line front end for the convergence-study toolkit.
 *
 * Subcommands: space-study, time-study, micro-study run the corresponding
 * sweep and write CSV plus SVG into the output directory; solve integrates a
 * single configuration and prints its error summary; tensor probes one
 * effective-tensor evaluation; selftest runs quick sanity checks.
 *
 * Exit codes: 0 success, 1 usage or configuration error, 2 numerical
 * failure, 3 divergence when the run does not tolerate it. All diagnostics
 * go to standard error.
 */

#include "hmmwave/config_file.hpp"
#include "hmmwave/plot.hpp"
#include "hmmwave/study.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace hmmwave;

/// Shared study options; CLI flags override config-file values when passed.
struct StudyCli {
    std::string config_path;
    std::string out_dir;
    bool plateau = false;
    bool verbose = false;
    bool no_timings = false;
    bool allow_divergence = false;

    std::vector<std::string> schemes;
    int order = 1;
    std::vector<int> mesh_levels;
    int mesh_level = 5;
    double tau = 1e-3;
    std::vector<double> tau_list;
    double tau_ref = 0.0;
    std::string reference;
    std::string tensor;
    double epsilon = 0.0;
    double delta = 0.0;
    int micro_subdivisions = 8;
    std::vector<int> micro_sweep;
    std::string coupling;
    std::string sampling;
    std::vector<double> micro_point;
    double final_time = 1.0;
    double cg_tolerance = 1e-12;
    double fp_tolerance = 1e-10;
    int fp_max_iterations = 200;
    double divergence_threshold = 1e30;
    int threads = 1;
    bool literal_nonlinearity = false;

    CLI::Option* o_schemes = nullptr;
    CLI::Option* o_order = nullptr;
    CLI::Option* o_mesh_levels = nullptr;
    CLI::Option* o_mesh_level = nullptr;
    CLI::Option* o_tau = nullptr;
    CLI::Option* o_tau_list = nullptr;
    CLI::Option* o_tau_ref = nullptr;
    CLI::Option* o_reference = nullptr;
    CLI::Option* o_tensor = nullptr;
    CLI::Option* o_epsilon = nullptr;
    CLI::Option* o_delta = nullptr;
    CLI::Option* o_micro_subdivisions = nullptr;
    CLI::Option* o_micro_sweep = nullptr;
    CLI::Option* o_coupling = nullptr;
    CLI::Option* o_sampling = nullptr;
    CLI::Option* o_micro_point = nullptr;
    CLI::Option* o_final_time = nullptr;
    CLI::Option* o_cg_tolerance = nullptr;
    CLI::Option* o_fp_tolerance = nullptr;
    CLI::Option* o_fp_max_iterations = nullptr;
    CLI::Option* o_divergence_threshold = nullptr;
    CLI::Option* o_threads = nullptr;
    CLI::Option* o_literal = nullptr;
};

void add_study_options(CLI::App& cmd, StudyCli& cli) {
    cmd.add_option("--config", cli.config_path, "Configuration file (key = value text)");
    cmd.add_option("--out-dir", cli.out_dir,
                   "Output directory (default: $HMMWAVE_OUT_DIR or the working directory)");
    cmd.add_flag("-v,--verbose", cli.verbose, "Print the effective configuration");
    cmd.add_flag("--no-timings", cli.no_timings, "Write wall_ms as 0 for bitwise-stable output");

    cli.o_schemes = cmd.add_option("--schemes", cli.schemes,
                                   "Schemes: imex, implicit_mp, explicit_mp")
                        ->delimiter(',');
    cli.o_order = cmd.add_option("--order", cli.order, "Macro element order (1 or 2)");
    cli.o_mesh_levels = cmd.add_option("--mesh-levels", cli.mesh_levels,
                                       "Macro mesh levels l, meaning H = 2^-l")
                            ->delimiter(',');
    cli.o_mesh_level =
        cmd.add_option("--mesh-level", cli.mesh_level, "Fixed macro mesh level for time sweeps");
    cli.o_tau = cmd.add_option("--tau", cli.tau, "Time step for space sweeps");
    cli.o_tau_list = cmd.add_option("--tau-list", cli.tau_list, "Time steps for time sweeps")
                         ->delimiter(',');
    cli.o_tau_ref = cmd.add_option("--tau-ref", cli.tau_ref,
                                   "Reference time step (0 picks final_time/4096)");
    cli.o_reference = cmd.add_option("--reference", cli.reference,
                                     "Time-study error reference: exact, reference, both");
    cli.o_tensor = cmd.add_option("--tensor", cli.tensor, "Tensor source: exact or hmm");
    cli.o_epsilon = cmd.add_option("--epsilon", cli.epsilon, "Fast scale of the coefficient");
    cli.o_delta = cmd.add_option("--delta", cli.delta, "Sampling cell edge length");
    cli.o_micro_subdivisions = cmd.add_option("--micro-subdivisions", cli.micro_subdivisions,
                                              "Micro mesh subdivisions per cell");
    cli.o_micro_sweep = cmd.add_option("--micro-sweep", cli.micro_sweep,
                                       "Micro subdivision sweep for micro studies")
                            ->delimiter(',');
    cli.o_coupling = cmd.add_option("--coupling", cli.coupling,
                                    "Cell coupling: periodic, dirichlet, neumann-mean-free");
    cli.o_sampling = cmd.add_option("--sampling", cli.sampling,
                                    "Coefficient sampling: frozen or sampled");
    cli.o_micro_point = cmd.add_option("--micro-point", cli.micro_point,
                                       "Macro sampling point x1,x2 for micro studies")
                            ->delimiter(',')
                            ->expected(2);
    cli.o_final_time = cmd.add_option("--final-time", cli.final_time, "Integration end time");
    cli.o_cg_tolerance = cmd.add_option("--cg-tol", cli.cg_tolerance, "CG relative tolerance");
    cli.o_fp_tolerance =
        cmd.add_option("--fp-tol", cli.fp_tolerance, "Fixed-point relative tolerance");
    cli.o_fp_max_iterations = cmd.add_option("--fp-max-iterations", cli.fp_max_iterations,
                                             "Fixed-point sweep limit per step");
    cli.o_divergence_threshold = cmd.add_option("--divergence-threshold",
                                                cli.divergence_threshold,
                                                "State magnitude that flags divergence");
    cli.o_threads = cmd.add_option("--threads", cli.threads,
                                   "Worker threads for macro assembly (0 = machine default)");
    cli.o_literal = cmd.add_flag("--literal-nonlinearity", cli.literal_nonlinearity,
                                 "Use the variant nonlinearity with the shift inside |.|");
}

StudyConfig build_config(const StudyCli& cli, StudyKind kind) {
    StudyConfig config;
    if (!cli.config_path.empty()) {
        config = load_study_config(cli.config_path, kind);
    } else {
        config.kind = kind;
    }
    if (cli.o_schemes->count()) {
        config.schemes.clear();
        for (const std::string& s : cli.schemes) config.schemes.push_back(scheme_from_string(s));
    }
    if (cli.o_order->count()) config.order = cli.order;
    if (cli.o_mesh_levels->count()) config.mesh_levels = cli.mesh_levels;
    if (cli.o_mesh_level->count()) config.time_mesh_level = cli.mesh_level;
    if (cli.o_tau->count()) config.tau = cli.tau;
    if (cli.o_tau_list->count()) config.tau_list = cli.tau_list;
    if (cli.o_tau_ref->count()) config.tau_ref = cli.tau_ref;
    if (cli.o_reference->count()) config.reference = time_reference_from_string(cli.reference);
    if (cli.o_tensor->count()) config.tensor = tensor_source_from_string(cli.tensor);
    if (cli.o_epsilon->count()) config.epsilon = cli.epsilon;
    if (cli.o_delta->count()) config.delta = cli.delta;
    if (cli.o_micro_subdivisions->count()) config.micro_subdivisions = cli.micro_subdivisions;
    if (cli.o_micro_sweep->count()) config.micro_sweep = cli.micro_sweep;
    if (cli.o_coupling->count()) config.coupling = coupling_from_string(cli.coupling);
    if (cli.o_sampling->count()) config.sampling = sampling_from_string(cli.sampling);
    if (cli.o_micro_point->count()) config.micro_point = {cli.micro_point[0], cli.micro_point[1]};
    if (cli.o_final_time->count()) config.final_time = cli.final_time;
    if (cli.o_cg_tolerance->count()) config.cg_tolerance = cli.cg_tolerance;
    if (cli.o_fp_tolerance->count()) config.fp_tolerance = cli.fp_tolerance;
    if (cli.o_fp_max_iterations->count()) config.fp_max_iterations = cli.fp_max_iterations;
    if (cli.o_divergence_threshold->count())
        config.divergence_threshold = cli.divergence_threshold;
    if (cli.o_threads->count()) config.threads = cli.threads;
    if (cli.o_literal->count()) config.literal_nonlinearity = cli.literal_nonlinearity;
    if (cli.no_timings) config.emit_timings = false;
    config.validate();
    return config;
}

std::filesystem::path resolve_out_dir(const StudyCli& cli) {
    if (!cli.out_dir.empty()) return cli.out_dir;
    if (const char* env = std::getenv("HMMWAVE_OUT_DIR"); env && *env) return env;
    return ".";
}

int run_study_command(const StudyCli& cli, StudyKind kind) {
    const StudyConfig config = build_config(cli, kind);
    if (cli.verbose) std::cerr << serialize_study_config(config);
    const StudyResult result = run_study(config);

    const std::filesystem::path dir = resolve_out_dir(cli);
    std::filesystem::create_directories(dir);
    const std::string stem = std::string(to_string(config.kind)) + "_study";
    const std::filesystem::path csv_path = dir / (stem + ".csv");
    const std::filesystem::path svg_path = dir / (stem + ".svg");
    write_csv(result, csv_path);
    write_plot(result, svg_path, stem);
    std::cerr << "wrote " << csv_path.string() << "\n";
    std::cerr << "wrote " << svg_path.string() << "\n";
    return 0;
}

int run_solve(const StudyCli& cli) {
    const StudyConfig config = build_config(cli, StudyKind::space);
    if (cli.verbose) std::cerr << serialize_study_config(config);
    const ProblemSpec spec = config.problem();
    const Scheme scheme = config.schemes.front();

    const int n = 1 << config.time_mesh_level;
    const Mesh mesh = build_uniform_quad_mesh({0.0, 0.0}, {1.0, 1.0}, {n, n});
    const FESpace space(mesh, config.order == 1 ? ElementOrder::q1 : ElementOrder::q2,
                        ConstraintKind::dirichlet);
    TensorCache cache;
    const TwoScaleCoefficient coeff = two_scale_coefficient(spec);
    const TensorField field = config.tensor == TensorSource::exact
                                  ? exact_homogenized_field()
                                  : [&] {
                                        CellConfig cell;
                                        cell.delta = config.delta;
                                        cell.epsilon = config.epsilon;
                                        cell.micro_subdivisions = config.micro_subdivisions;
                                        cell.coupling = config.coupling;
                                        cell.sampling = config.sampling;
                                        return make_hmm_field(cell, coeff, &cache);
                                    }();
    const SystemOperators ops =
        make_wave_operators(spec, space, field, assembly_rule(space.order()),
                            config.resolved_threads());

    IntegrateOptions opts;
    opts.cg = {config.cg_tolerance, 0};
    opts.fp_tolerance = config.fp_tolerance;
    opts.fp_max_iterations = config.fp_max_iterations;
    opts.divergence_threshold = config.divergence_threshold;

    const IntegrationResult run =
        integrate(initial_state(spec, space), ops, scheme, config.tau, spec.final_time, opts);

    std::printf("scheme=%s p=%d H=%s tau=%s steps=%d\n", to_string(scheme), config.order,
                format_double(1.0 / n).c_str(), format_double(config.tau).c_str(),
                run.steps_taken);
    if (run.diverged) {
        std::printf("diverged=true diverged_time=%s\n",
                    format_double(run.diverged_time).c_str());
        if (!cli.allow_divergence) {
            std::cerr << "error: the run diverged at t = " << format_double(run.diverged_time)
                      << " (pass --allow-divergence to tolerate this)\n";
            return 3;
        }
        return 0;
    }
    const ErrorBreakdown eb =
        exact_error_breakdown(space, run.state.mu, run.state.nu, spec.final_time);
    std::printf("err_u_H1=%s err_v_L2=%s E_total=%s\n", format_double(eb.err_u_h1).c_str(),
                format_double(eb.err_v_l2).c_str(), format_double(eb.e_total).c_str());
    std::printf("energy=%s composite_solves=%ld mass_solves=%ld nonlin_evals=%ld cg_iters=%ld\n",
                format_double(system_energy(ops, run.state)).c_str(),
                run.counters.composite_solves, run.counters.mass_solves,
                run.counters.nonlinearity_evaluations, run.counters.cg_iterations);
    return 0;
}

void print_tensor(const SymMat2& t) {
    const double scale = std::abs(t.a11) + std::abs(t.a22);
    if (std::abs(t.a12) <= 1e-10 * std::max(1.0, scale)) {
        std::printf("diag(%.6g, %.6g)\n", t.a11, t.a22);
    } else {
        std::printf("sym(%.6g, %.6g, %.6g)\n", t.a11, t.a12, t.a22);
    }
}

int run_tensor(double x1, double x2, const std::string& mode, const StudyCli& cli) {
    if (mode == "exact") {
        print_tensor(homogenized_tensor_exact(x1));
        return 0;
    }
    if (mode == "reference") {
        print_tensor(homogenized_tensor_reference_1d(x1));
        return 0;
    }
    if (mode == "hmm") {
        ProblemSpec spec;
        if (cli.o_epsilon->count()) spec.epsilon = cli.epsilon;
        CellConfig cell;
        cell.macro_point = {x1, x2};
        cell.delta = cli.o_delta->count() ? cli.delta : 1.0 / 32.0;
        cell.epsilon = spec.epsilon;
        cell.micro_subdivisions = cli.micro_subdivisions;
        if (cli.o_coupling->count()) cell.coupling = coupling_from_string(cli.coupling);
        if (cli.o_sampling->count()) cell.sampling = sampling_from_string(cli.sampling);
        print_tensor(homogenized_tensor_hmm(cell, two_scale_coefficient(spec)));
        return 0;
    }
    throw std::invalid_argument("unknown tensor mode: " + mode +
                                " (expected exact, hmm, or reference)");
}

int run_selftest() {
    int failures = 0;
    const auto check = [&](const char* name, bool ok) {
        std::cerr << (ok ? "ok   " : "FAIL ") << name << "\n";
        if (!ok) ++failures;
    };
    const auto near = [](double a, double b, double tol) { return std::abs(a - b) <= tol; };

    for (int n = 1; n <= 5; ++n) {
        const QuadratureRule rule = gauss_rule(n);
        double sum = 0.0;
        for (double w : rule.weights) sum += w;
        check("quadrature weights sum to one", near(sum, 1.0, 1e-14));
    }

    ProblemSpec spec;
    check("nonlinearity vanishes at zero", nonlinearity(0.0, spec) == 0.0);
    check("nonlinearity is odd",
          near(nonlinearity(-0.7, spec), -nonlinearity(0.7, spec), 1e-15));
    check("nonlinearity value at two", near(nonlinearity(2.0, spec), 1.51178, 2e-5));
    check("coefficient at origin", near(oscillatory_coefficient({0.0, 0.5}, spec).a11, 0.33, 1e-15));
    check("exact solution at center",
          near(exact_solution(0.0, {0.5, 0.5}), 0.5, 1e-15));
    check("velocity identity",
          near(exact_velocity(0.3, {0.4, 0.7}),
               std::numbers::pi * exact_solution(0.3, {0.4, 0.7}), 1e-14));
    check("exact tensor probe", near(homogenized_tensor_exact(0.25).a11, 0.455961, 1e-6) &&
                                    near(homogenized_tensor_exact(0.25).a22, 0.48, 1e-12));

    const std::vector<double> rates = estimate_rates(std::vector<double>{1.0, 0.25},
                                                     std::vector<double>{1.0, 0.5});
    check("rate extraction", rates.size() == 1 && near(rates[0], 2.0, 1e-14));

    const Mesh mesh = build_uniform_quad_mesh({0.0, 0.0}, {1.0, 1.0}, {4, 4});
    check("mesh counts", mesh.node_count() == 25 && mesh.element_count() == 16 &&
                             mesh.boundary_nodes.size() == 16);

    TwoScaleCoefficient constant;
    constant.value = [](Vec2, Vec2) { return 2.0; };
    constant.lower = 2.0;
    constant.upper = 2.0;
    CellConfig cell;
    cell.delta = 0.25;
    cell.epsilon = 0.25;
    cell.micro_subdivisions = 8;
    const SymMat2 two = homogenized_tensor_hmm(cell, constant);
    check("constant cell tensor", near(two.a11, 2.0, 1e-8) && near(two.a22, 2.0, 1e-8) &&
                                      near(two.a12, 0.0, 1e-8));

    if (failures == 0) {
        std::printf("selftest passed\n");
        return 0;
    }
    std::cerr << "selftest: " << failures << " check(s) failed\n";
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Convergence studies for damped semilinear waves with multiscale tensors"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "hmmwave 0.1.0");

    StudyCli space_cli, time_cli, micro_cli, solve_cli, tensor_cli;

    CLI::App* space_cmd =
        app.add_subcommand("space-study", "Macro mesh refinement sweep at fixed time step");
    add_study_options(*space_cmd, space_cli);
    space_cmd->add_flag("--plateau", space_cli.plateau,
                        "Run the multiscale plateau variant of the space study");

    CLI::App* time_cmd =
        app.add_subcommand("time-study", "Time step refinement sweep on a fixed mesh");
    add_study_options(*time_cmd, time_cli);

    CLI::App* micro_cmd =
        app.add_subcommand("micro-study", "Cell-problem refinement sweep at one macro point");
    add_study_options(*micro_cmd, micro_cli);

    CLI::App* solve_cmd =
        app.add_subcommand("solve", "Integrate one configuration and print an error summary");
    add_study_options(*solve_cmd, solve_cli);
    solve_cmd->add_flag("--allow-divergence", solve_cli.allow_divergence,
                        "Exit 0 even when the run diverges");

    double tensor_x1 = 0.25, tensor_x2 = 0.25;
    std::string tensor_mode = "exact";
    CLI::App* tensor_cmd =
        app.add_subcommand("tensor", "Evaluate one effective tensor and print it");
    add_study_options(*tensor_cmd, tensor_cli);
    tensor_cmd->add_option("--x1", tensor_x1, "First coordinate of the macro point");
    tensor_cmd->add_option("--x2", tensor_x2, "Second coordinate of the macro point");
    tensor_cmd->add_option("--mode", tensor_mode, "Tensor source: exact, hmm, reference");

    CLI::App* selftest_cmd = app.add_subcommand("selftest", "Run quick sanity checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        (void)app.exit(e);
        return 1;
    }

    try {
        if (space_cmd->parsed())
            return run_study_command(space_cli,
                                     space_cli.plateau ? StudyKind::plateau : StudyKind::space);
        if (time_cmd->parsed()) return run_study_command(time_cli, StudyKind::time);
        if (micro_cmd->parsed()) return run_study_command(micro_cli, StudyKind::micro);
        if (solve_cmd->parsed()) return run_solve(solve_cli);
        if (tensor_cmd->parsed()) return run_tensor(tensor_x1, tensor_x2, tensor_mode, tensor_cli);
        if (selftest_cmd->parsed()) return run_selftest();
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const SolverError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
