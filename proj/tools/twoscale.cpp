// Command-line driver: validate / solve / mms / bench.
#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <vector>

#include <CLI11.hpp>

#include "twoscale/config.hpp"
#include "twoscale/csv.hpp"
#include "twoscale/mms.hpp"
#include "twoscale/parallel.hpp"
#include "twoscale/solver.hpp"
#include "twoscale/vtk.hpp"

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitValidationError = 3;
constexpr int kExitSolverError = 4;
constexpr int kExitMmsGateError = 5;

struct Options {
    std::string config_path;
    std::string out_dir = ".";
    int threads = 0;  // 0 -> TWOSCALE_THREADS or hardware concurrency
    std::string sweep;
};

std::vector<int> parse_sweep(const std::string& sweep) {
    std::vector<int> values;
    std::stringstream in(sweep);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        if (tok.empty()) continue;
        values.push_back(std::stoi(tok));
    }
    if (values.empty()) throw twoscale::ConfigError("--sweep must list at least one value");
    return values;
}

twoscale::SolveOptions solve_options(const twoscale::Config& cfg, int workers) {
    twoscale::SolveOptions opts;
    opts.inner_tol = cfg.inner_tol;
    opts.inner_maxit = cfg.inner_maxit;
    opts.outer_tol = cfg.outer_tol;
    opts.max_outer = cfg.max_outer;
    opts.workers = workers;
    return opts;
}

std::vector<twoscale::Vec2> grid_nodes(const twoscale::Grid& g) {
    std::vector<twoscale::Vec2> nodes(g.node_count());
    for (int i = 0; i < g.node_count(); ++i) nodes[i] = g.node(i);
    return nodes;
}

// Jacobian bounds, role sanity (A1/A2) and the Assumption-6 parameter checks.
// Returns false on a hard error; Assumption-6 violations only warn.
bool run_validation(const twoscale::ProblemSetup& setup, int workers, int* warnings) {
    using namespace twoscale;
    const ProblemData& data = setup.data;
    bool ok = true;

    if (!data.roles.has_micro_role(MicroRole::GammaI) ||
        !data.roles.has_micro_role(MicroRole::GammaO)) {
        std::cout << "ERROR: micro boundary needs at least one Gamma^I and one Gamma^O side\n";
        ok = false;
    }
    if (!data.roles.has_macro_dirichlet()) {
        std::cout << "ERROR: macro boundary needs a nonempty Dirichlet part\n";
        ok = false;
    }

    const CompiledDiffeo map(data.diffeo, data.params);
    const DiffeoValidation v =
        validate_diffeo(map, data.bounds, grid_nodes(setup.macro), grid_nodes(setup.micro));
    std::cout << (v.pass ? "ok:    " : "ERROR: ") << v.message << "\n";
    ok = ok && v.pass;

    if (ok) {
        const QuadratureRule rule = QuadratureRule::gauss(2);
        const auto nodes = grid_nodes(setup.macro);
        const MapCache cache = build_cache(map, nodes, setup.micro, rule, workers, false);
        const CompiledExpr dw(data.Dw, data.params);
        const Assumption6Report rep =
            check_assumption6(data.kappa1, data.kappa2, data.kappa3, data.kappa4, dw, cache,
                              setup.micro, rule, data.roles, nodes);
        if (!rep.ok1) {
            std::cout << "WARNING: assumption 6 inequality 1 violated: |k1-k2|/2 * |Gamma^I| = "
                      << rep.lhs1_max << " >= 1\n";
            ++*warnings;
        }
        if (!rep.ok2) {
            std::cout << "WARNING: assumption 6 inequality 2 violated: |k3-k4|/2 * |Gamma^O| = "
                      << rep.lhs2_max << " >= min D^w = " << rep.min_dw << "\n";
            ++*warnings;
        }
        if (rep.ok1 && rep.ok2) std::cout << "ok:    assumption 6 parameter relations hold\n";
    }
    return ok;
}

int cmd_validate(const Options& opt) {
    const twoscale::Config cfg = twoscale::load_config(opt.config_path);
    const twoscale::ProblemSetup setup = twoscale::make_problem(cfg);
    int warnings = 0;
    const bool ok = run_validation(setup, twoscale::resolve_worker_count(opt.threads), &warnings);
    std::cout << (ok ? "validation passed" : "validation FAILED") << " (" << warnings
              << " warning(s))\n";
    return ok ? 0 : kExitValidationError;
}

int cmd_solve(const Options& opt) {
    using namespace twoscale;
    const Config cfg = load_config(opt.config_path);
    const ProblemSetup setup = make_problem(cfg);
    const int workers = resolve_worker_count(opt.threads);

    int warnings = 0;
    if (!run_validation(setup, workers, &warnings)) return kExitValidationError;

    const SolveOptions opts = solve_options(cfg, workers);
    const SolveResult res = fixed_point_solve(setup.data, setup.macro, setup.micro, opts);
    if (res.report.w_pinned)
        std::cout << "note: kappa3 = 0 makes the w-system singular; dof 0 pinned to 0\n";

    std::filesystem::create_directories(opt.out_dir);
    write_residuals_csv(res.state.residual_history, opt.out_dir + "/residuals.csv");
    if (!res.report.converged) {
        std::cout << "outer iteration did NOT converge after " << res.report.sweeps
                  << " sweeps; residual trace:\n";
        for (std::size_t k = 0; k < res.state.residual_history.size(); ++k)
            std::cout << "  sweep " << k + 1 << ": " << res.state.residual_history[k] << "\n";
        return kExitSolverError;
    }

    write_vtk_macro(setup.macro, {{"u", &res.state.u}, {"w", &res.state.w}},
                    opt.out_dir + "/macro.vtk");
    const CompiledDiffeo map(setup.data.diffeo, setup.data.params);
    write_vtk_micro(res.state.V, setup.macro, setup.micro, map, cfg.micro_viz_scale,
                    opt.out_dir + "/micro.vtk");
    std::cout << "converged in " << res.report.sweeps << " sweeps, final residual "
              << res.report.final_residual << "\n";
    std::cout << "wrote " << opt.out_dir << "/macro.vtk, micro.vtk, residuals.csv\n";
    return 0;
}

int cmd_mms(const Options& opt) {
    using namespace twoscale;
    const Config cfg = load_config(opt.config_path);
    if (!cfg.has_mms) {
        std::cout << "config error: mms subcommand needs an [mms] section\n";
        return kExitConfigError;
    }
    const ProblemSetup setup = make_problem(cfg);
    const int workers = resolve_worker_count(opt.threads);
    const std::vector<int> ns = parse_sweep(opt.sweep);

    const ProblemData derived = derive_data(setup.mms);
    const double residual = residual_check(setup.mms, derived);
    std::cout << "manufactured-data residual check: " << residual << "\n";
    if (residual > 1e-6) {
        std::cout << "ERROR: residual gate exceeded (1e-6); refusing to run the sweep\n";
        return kExitMmsGateError;
    }

    const ErrorReport report = convergence_sweep(setup.mms, ns, solve_options(cfg, workers));
    std::cout << format_error_report_csv(report);
    std::filesystem::create_directories(opt.out_dir);
    write_error_report_csv(report, opt.out_dir + "/mms_report.csv");
    std::cout << "wrote " << opt.out_dir << "/mms_report.csv\n";
    return 0;
}

int cmd_bench(const Options& opt) {
    using namespace twoscale;
    const Config cfg = load_config(opt.config_path);
    const ProblemSetup setup = make_problem(cfg);
    const std::vector<int> threads = parse_sweep(opt.sweep);

    std::vector<BenchRow> rows;
    double t1 = 0.0;
    for (int t : threads) {
        const auto start = std::chrono::steady_clock::now();
        const SolveResult res = fixed_point_solve(setup.data, setup.macro, setup.micro,
                                                  solve_options(cfg, t));
        const double seconds = std::chrono::duration<double>(
                                   std::chrono::steady_clock::now() - start)
                                   .count();
        if (!res.report.converged) {
            std::cout << "bench solve did not converge at " << t << " threads\n";
            return kExitSolverError;
        }
        if (rows.empty()) t1 = seconds;
        rows.push_back({t, seconds, t1 / seconds});
        std::cout << "threads " << t << ": " << seconds << " s, speedup " << t1 / seconds << "\n";
    }
    std::filesystem::create_directories(opt.out_dir);
    write_bench_csv(rows, opt.out_dir + "/bench.csv");
    std::cout << "wrote " << opt.out_dir << "/bench.csv\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-scale finite element solver for coupled macro/micro transport"};
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&](CLI::App* cmd, bool with_sweep) {
        cmd->add_option("--config", opt.config_path, "configuration file")->required();
        cmd->add_option("--threads", opt.threads,
                        "worker count (default: TWOSCALE_THREADS or hardware)");
        cmd->add_option("--out", opt.out_dir, "output directory");
        if (with_sweep)
            cmd->add_option("--sweep", opt.sweep, "comma-separated list")->required();
    };

    CLI::App* validate = app.add_subcommand("validate", "check map bounds and data assumptions");
    add_common(validate, false);
    CLI::App* solve = app.add_subcommand("solve", "run the coupled solver and write artifacts");
    add_common(solve, false);
    CLI::App* mms = app.add_subcommand("mms", "manufactured-solutions convergence sweep");
    add_common(mms, true);
    CLI::App* bench = app.add_subcommand("bench", "wall-time scaling over a thread sweep");
    add_common(bench, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_validate(opt);
        if (solve->parsed()) return cmd_solve(opt);
        if (mms->parsed()) return cmd_mms(opt);
        if (bench->parsed()) return cmd_bench(opt);
    } catch (const twoscale::ConfigError& e) {
        std::cout << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const twoscale::DegenerateMapError& e) {
        std::cout << "validation error: " << e.what() << "\n";
        return kExitValidationError;
    } catch (const twoscale::SolverError& e) {
        std::cout << "solver error: " << e.what() << "\n";
        return kExitSolverError;
    } catch (const std::exception& e) {
        std::cout << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
