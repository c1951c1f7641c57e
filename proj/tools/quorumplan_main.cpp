// quorumplan: plan and validate quorum-of-agents response systems.
//
// Subcommands:
//   accuracy  - per-user aggregated accuracy (exact + Gaussian) over a range of m
//   optimize  - find the ensemble size minimizing the accuracy/latency objective
//   simulate  - discrete-event Monte Carlo run cross-checked against the closed forms
//   analyze   - ensemble curves and theory bounds from a recorded response matrix
//
// Exit codes: 0 success, 2 input/validation error, 3 infeasible model,
// 4 statistical mismatch under --assert-match.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "quorum/config.hpp"
#include "quorum/ensemble_math.hpp"
#include "quorum/optimizer.hpp"
#include "quorum/reporting.hpp"
#include "quorum/response_analysis.hpp"
#include "quorum/simulator.hpp"
#include "quorum/types.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitMismatch = 4;

struct ConfigArgs {
    std::string config_path;
    bool use_fig5 = false;
    double theta_override = -1.0;
    bool has_theta_override = false;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
    auto* config = cmd->add_option("--config", args.config_path, "JSON system config");
    auto* fig5 = cmd->add_flag("--fig5", args.use_fig5,
                               "use the built-in 10-cluster reference configuration");
    config->excludes(fig5);
    cmd->add_option("--theta", args.theta_override, "override the objective's theta weight")
        ->each([&args](const std::string&) { args.has_theta_override = true; });
}

quorum::LoadedConfig resolve_config(const ConfigArgs& args) {
    quorum::LoadedConfig loaded;
    if (args.use_fig5) {
        loaded.system = quorum::fig5_system();
    } else if (!args.config_path.empty()) {
        loaded = quorum::load_config_file(args.config_path);
    } else {
        throw quorum::ConfigError("pass --config <path> or --fig5");
    }
    if (args.has_theta_override) loaded.system.theta = args.theta_override;
    quorum::validate(loaded.system);
    return loaded;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw quorum::ConfigError("cannot open output file: " + path);
    return out;
}

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> values;
    std::stringstream ss(csv);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            values.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw quorum::ConfigError("cannot parse number '" + cell + "'");
        }
    }
    return values;
}

int run_accuracy(const ConfigArgs& config_args, int m_min, int m_max, bool range_set,
                 const std::string& out_path) {
    const auto loaded = resolve_config(config_args);
    if (!range_set && loaded.m_range) {
        m_min = loaded.m_range->first;
        m_max = loaded.m_range->second;
    }
    if (m_min < 1 || m_min > m_max) throw quorum::ConfigError("need 1 <= m-min <= m-max");
    auto out = open_output(out_path);
    quorum::write_accuracy_csv(out, loaded.system, m_min, m_max);
    std::cout << "wrote " << (m_max - m_min + 1) * loaded.system.users.size()
              << " rows to " << out_path << "\n";
    return kExitOk;
}

int run_optimize(const ConfigArgs& config_args, const std::string& method_name, int m_min,
                 int m_max, bool range_set, int starts, std::uint64_t seed,
                 const std::string& out_path, const std::string& curve_path) {
    const auto loaded = resolve_config(config_args);
    quorum::OptimizeRequest request;
    request.system = loaded.system;
    if (range_set) {
        request.m_min = m_min;
        request.m_max = m_max;
    } else if (loaded.m_range) {
        request.m_min = loaded.m_range->first;
        request.m_max = loaded.m_range->second;
    }
    request.starts = starts;
    request.seed = loaded.seed.value_or(seed);
    if (method_name == "grid") {
        request.method = quorum::OptimizeMethod::Grid;
    } else if (method_name == "relaxed") {
        request.method = quorum::OptimizeMethod::Relaxed;
    } else if (method_name == "both") {
        request.method = quorum::OptimizeMethod::Both;
    } else {
        throw quorum::ConfigError("method must be grid, relaxed or both");
    }

    const quorum::OptimizeReport report = quorum::optimize(request);

    if (!out_path.empty()) {
        auto out = open_output(out_path);
        out << quorum::optimize_report_to_json(report, request).dump(2) << "\n";
    }
    if (!curve_path.empty()) {
        auto out = open_output(curve_path);
        quorum::write_objective_curve_csv(out, report);
    }

    if (request.method != quorum::OptimizeMethod::Relaxed) {
        std::cout << "exact objective:   best m = " << report.best_m_exact
                  << "  (value " << report.best_value_exact << ")\n";
    }
    const int curve_argmin = quorum::relaxed_curve_argmin(report);
    if (curve_argmin > 0)
        std::cout << "relaxed objective: best integer m = " << curve_argmin << "\n";
    if (request.method != quorum::OptimizeMethod::Grid) {
        std::cout << "relaxed descent:   m = " << report.best_m_relaxed_real
                  << "  -> rounded " << report.best_m_relaxed_rounded << "\n";
    }
    if (report.methods_disagree)
        std::cout << "note: grid and relaxed answers differ by more than 2\n";
    return kExitOk;
}

int run_simulate(const ConfigArgs& config_args, int m, std::uint64_t seed, bool seed_set,
                 std::uint64_t deliveries, double horizon, std::uint64_t warmup,
                 const std::string& out_path, const std::string& trace_path, bool assert_match) {
    const auto loaded = resolve_config(config_args);
    quorum::SimConfig sim;
    sim.system = loaded.system;
    sim.m = m;
    sim.seed = seed_set ? seed : loaded.seed.value_or(seed);
    sim.warmup_deliveries = warmup;
    if (deliveries > 0 && horizon > 0.0)
        throw quorum::ConfigError("pass either --deliveries or --horizon, not both");
    if (deliveries > 0) {
        sim.stop = quorum::StopRule::correct_deliveries(deliveries);
    } else {
        sim.stop = quorum::StopRule::time_horizon(horizon);
    }
    quorum::validate(sim);

    std::vector<quorum::TraceRow> trace;
    const quorum::SimReport report =
        quorum::run_simulation(sim, trace_path.empty() ? nullptr : &trace);

    if (!out_path.empty()) {
        auto out = open_output(out_path);
        auto doc = quorum::report_to_json(report, sim);
        doc["tool_version"] = quorum::kToolVersion;
        doc["config"] = quorum::system_to_json(sim.system);
        out << doc.dump(2) << "\n";
    }
    if (!trace_path.empty()) {
        auto out = open_output(trace_path);
        quorum::write_trace_csv(out, trace);
    }

    const auto comparison = quorum::compare_with_theory(report, sim.system);
    bool mismatch = false;
    for (const auto& row : comparison) {
        std::printf("user %zu: accuracy %.5f vs theory %.5f (z = %+.2f)", row.user,
                    row.acc_empirical, row.acc_theory, row.acc_z);
        if (row.s_available) {
            std::printf("  |  S %.5f vs theory %.5f (z = %+.2f)\n", row.s_empirical,
                        row.s_theory, row.s_z);
        } else {
            std::printf("  |  S: no measured intervals\n");
        }
        if (std::abs(row.acc_z) > 4.0) mismatch = true;
        if (row.s_available && std::abs(row.s_z) > 4.0) mismatch = true;
    }
    if (assert_match && mismatch) {
        std::cerr << "assert-match: empirical estimates deviate by more than 4 s.e.\n";
        return kExitMismatch;
    }
    return kExitOk;
}

int run_analyze(const std::string& matrix_path, const std::string& synthetic_spec,
                std::size_t synthetic_rows, std::uint64_t seed, double prior_w,
                const std::string& out_path, bool bounds, std::string bounds_path,
                const std::string& save_matrix_path) {
    quorum::ResponseMatrix matrix;
    if (!synthetic_spec.empty()) {
        matrix = quorum::make_synthetic_matrix(parse_double_list(synthetic_spec), prior_w,
                                               synthetic_rows, seed);
    } else if (!matrix_path.empty()) {
        matrix = quorum::load_matrix_file(matrix_path);
    } else {
        throw quorum::ConfigError("pass --matrix <path> or --synthetic <p1,p2,...>");
    }
    if (!save_matrix_path.empty()) {
        auto out = open_output(save_matrix_path);
        quorum::write_matrix_csv(out, matrix);
    }

    const auto curve = quorum::permutation_average_curve(matrix, prior_w);
    auto out = open_output(out_path);
    quorum::write_curve_csv(out, curve);
    std::cout << "models: " << matrix.model_count() << ", rows: " << matrix.rows.size()
              << ", even-vote ties decide +1\n";
    for (const auto& point : curve)
        std::printf("m = %2d: mean %.5f  [min %.5f, max %.5f]  over %llu subsets\n", point.m,
                    point.mean_accuracy, point.min_accuracy, point.max_accuracy,
                    static_cast<unsigned long long>(point.n_subsets));

    if (bounds || !bounds_path.empty()) {
        if (bounds_path.empty()) bounds_path = out_path + ".bounds.csv";
        const auto bounds_points = quorum::bounds_curve(matrix, prior_w);
        auto bout = open_output(bounds_path);
        quorum::write_bounds_csv(bout, bounds_points);
        std::cout << "wrote bounds to " << bounds_path << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"planner and validator for quorum-of-agents response systems"};
    app.require_subcommand(1);

    // accuracy
    auto* accuracy = app.add_subcommand("accuracy", "aggregated accuracy vs m");
    ConfigArgs accuracy_config;
    add_config_options(accuracy, accuracy_config);
    int acc_m_min = 1, acc_m_max = 50;
    auto* acc_min_opt = accuracy->add_option("--m-min", acc_m_min, "smallest m");
    auto* acc_max_opt = accuracy->add_option("--m-max", acc_m_max, "largest m");
    std::string acc_out = "accuracy.csv";
    accuracy->add_option("--out", acc_out, "output CSV path");

    // optimize
    auto* optimize = app.add_subcommand("optimize", "minimize the accuracy/latency objective");
    ConfigArgs optimize_config;
    add_config_options(optimize, optimize_config);
    std::string method = "both";
    optimize->add_option("--method", method, "grid, relaxed or both");
    int opt_m_min = 1, opt_m_max = 200;
    auto* opt_min_opt = optimize->add_option("--m-min", opt_m_min, "smallest m");
    auto* opt_max_opt = optimize->add_option("--m-max", opt_m_max, "largest m");
    int starts = 16;
    optimize->add_option("--starts", starts, "descent start count");
    std::uint64_t opt_seed = 1;
    optimize->add_option("--seed", opt_seed, "seed for start placement");
    std::string opt_out = "optimize.json";
    optimize->add_option("--out", opt_out, "report JSON path");
    std::string curve_out;
    optimize->add_option("--curve", curve_out, "objective curve CSV path");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "discrete-event Monte Carlo run");
    ConfigArgs simulate_config;
    add_config_options(simulate, simulate_config);
    int sim_m = 1;
    simulate->add_option("--m", sim_m, "agents per cluster")->required();
    std::uint64_t sim_seed = 1;
    auto* sim_seed_opt = simulate->add_option("--seed", sim_seed, "simulation seed");
    std::uint64_t sim_deliveries = 0;
    simulate->add_option("--deliveries", sim_deliveries, "stop after N correct deliveries");
    double sim_horizon = -1.0;
    auto* horizon_opt = simulate->add_option("--horizon", sim_horizon, "stop at this sim time");
    std::uint64_t sim_warmup = 0;
    simulate->add_option("--warmup", sim_warmup, "correct deliveries to discard first");
    std::string sim_out = "simulation.json";
    simulate->add_option("--out", sim_out, "report JSON path");
    std::string sim_trace;
    simulate->add_option("--trace", sim_trace, "per-delivery trace CSV path");
    bool assert_match = false;
    simulate->add_flag("--assert-match", assert_match, "exit 4 when any |z| exceeds 4");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "ensemble curves from a response matrix");
    std::string matrix_path;
    analyze->add_option("--matrix", matrix_path, "response matrix CSV");
    std::string synthetic_spec;
    analyze->add_option("--synthetic", synthetic_spec,
                        "generate an independent synthetic matrix at these per-model accuracies");
    std::size_t synthetic_rows = 1000;
    analyze->add_option("--rows", synthetic_rows, "synthetic matrix row count");
    std::uint64_t analyze_seed = 1;
    analyze->add_option("--seed", analyze_seed, "synthetic matrix seed");
    double prior_w = 0.5;
    analyze->add_option("--prior", prior_w, "prior probability a query is true");
    std::string analyze_out = "curve.csv";
    analyze->add_option("--out", analyze_out, "curve CSV path");
    bool bounds = false;
    analyze->add_flag("--bounds", bounds, "also write theory bounds");
    std::string bounds_out;
    analyze->add_option("--bounds-out", bounds_out, "bounds CSV path");
    std::string save_matrix;
    analyze->add_option("--save-matrix", save_matrix, "write the (synthetic) matrix CSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitInput;
    }

    try {
        if (app.got_subcommand(accuracy)) {
            const bool range_set = acc_min_opt->count() > 0 || acc_max_opt->count() > 0;
            return run_accuracy(accuracy_config, acc_m_min, acc_m_max, range_set, acc_out);
        }
        if (app.got_subcommand(optimize)) {
            const bool range_set = opt_min_opt->count() > 0 || opt_max_opt->count() > 0;
            return run_optimize(optimize_config, method, opt_m_min, opt_m_max, range_set,
                                starts, opt_seed, opt_out, curve_out);
        }
        if (app.got_subcommand(simulate)) {
            if (horizon_opt->count() > 0 && !(sim_horizon > 0.0))
                throw quorum::ConfigError("horizon must be positive");
            return run_simulate(simulate_config, sim_m, sim_seed, sim_seed_opt->count() > 0,
                                sim_deliveries, sim_horizon > 0.0 ? sim_horizon : 0.0,
                                sim_warmup, sim_out, sim_trace, assert_match);
        }
        if (app.got_subcommand(analyze)) {
            return run_analyze(matrix_path, synthetic_spec, synthetic_rows, analyze_seed,
                               prior_w, analyze_out, bounds, bounds_out, save_matrix);
        }
    } catch (const quorum::InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const quorum::MatrixParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitInput;
    } catch (const quorum::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}
