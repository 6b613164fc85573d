// compoda: config-driven simulator for distributed composite optimization
// under compressed communication. Subcommands: run, sweep, check, gen.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "compoda/battery.hpp"
#include "compoda/config.hpp"
#include "compoda/diagnostics.hpp"
#include "compoda/engine.hpp"
#include "compoda/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

std::string fmt9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

int thread_cap() {
    if (const char* env = std::getenv("COMPODA_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

json summary_json(const compoda::RunTrace& tr, long T) {
    json s;
    s["T"] = T;
    s["f_star_est"] = tr.F_star_est;
    s["final_F_real"] = tr.final_F_real;
    s["final_F_virtual"] = tr.final_F_virtual;
    s["F_xbar"] = tr.F_xbar;
    s["comm_total"] = tr.comm_total;
    s["tau_bits_total"] = tr.tau_bits_total;
    s["tau_index"] = tr.tau_index;
    s["gamma_last"] = tr.gamma_last;
    return s;
}

void write_run_outputs(const compoda::RunTrace& tr, long T, const std::string& dir) {
    fs::create_directories(dir);
    compoda::write_file_atomic(dir + "/trace.csv", compoda::emit_trace_csv(tr));
    json s = summary_json(tr, T);
    if (!tr.config_echo.empty()) s["config"] = json::parse(tr.config_echo);
    compoda::write_file_atomic(dir + "/summary.json", s.dump(2) + "\n");
}

void print_summary(const compoda::RunTrace& tr) {
    std::cout << "final_F_real     " << fmt9(tr.final_F_real) << "\n"
              << "final_F_virtual  " << fmt9(tr.final_F_virtual) << "\n"
              << "F_xbar           " << fmt9(tr.F_xbar) << "\n"
              << "comm_total       " << fmt9(tr.comm_total) << "\n"
              << "tau_bits_total   " << tr.tau_bits_total << "\n"
              << "f_star_est       " << fmt9(tr.F_star_est) << "\n";
}

std::string read_config_file(const std::string& path) {
    try {
        return compoda::read_file(path);
    } catch (const std::exception& e) {
        throw compoda::ConfigError(e.what());
    }
}

compoda::ExperimentConfig load_config(const std::string& path, const std::string& out_override,
                                      long seed_override, bool debug_override) {
    compoda::ExperimentConfig cfg = compoda::parse_config(read_config_file(path));
    if (!out_override.empty()) cfg.output_dir = out_override;
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    if (debug_override) cfg.debug = true;
    return cfg;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, long seed, bool debug) {
    compoda::ExperimentConfig cfg = load_config(config_path, out_dir, seed, debug);
    compoda::RunSetup su = compoda::resolve_config(cfg);
    compoda::RunTrace tr = compoda::run_experiment(su);
    write_run_outputs(tr, cfg.T, cfg.output_dir);
    print_summary(tr);
    std::cout << "trace: " << cfg.output_dir << "/trace.csv\n";
    return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir, long seed, bool debug,
              std::vector<double> grid) {
    compoda::ExperimentConfig cfg = load_config(config_path, out_dir, seed, debug);
    if (grid.empty()) grid = cfg.grid;
    if (grid.empty()) {
        // paper sweeps: 1/gamma for the dual-averaging runs, h for baselines
        grid = cfg.algo_kind == "econtrol_da"
                   ? std::vector<double>{0.1, 0.05, 0.01, 0.005, 0.001, 0.0005, 0.0001}
                   : std::vector<double>{0.1, 0.01, 0.001, 0.0001};
    }

    compoda::RunSetup base = compoda::resolve_config(cfg);
    std::vector<compoda::RunTrace> traces(grid.size());
    std::vector<std::string> errors(grid.size());

    const int width = std::max(1, thread_cap());
    for (std::size_t start = 0; start < grid.size(); start += static_cast<std::size_t>(width)) {
        std::vector<std::thread> pool;
        const std::size_t stop = std::min(grid.size(), start + static_cast<std::size_t>(width));
        for (std::size_t g = start; g < stop; ++g) {
            pool.emplace_back([&, g]() {
                try {
                    compoda::RunSetup su = base;
                    compoda::apply_grid_point(su, grid[g]);
                    traces[g] = compoda::run_experiment(su);
                } catch (const std::exception& e) {
                    errors[g] = e.what();
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    json table = json::array();
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        if (!errors[g].empty()) throw std::runtime_error("sweep point " + std::to_string(g) + ": " + errors[g]);
        const std::string sub = cfg.output_dir + "/sweep_" + compoda::format_double(grid[g]);
        write_run_outputs(traces[g], cfg.T, sub);
        json row;
        row["value"] = grid[g];
        row["final_F_real"] = traces[g].final_F_real;
        row["comm_total"] = traces[g].comm_total;
        row["dir"] = sub;
        table.push_back(row);
        if (traces[g].final_F_real < best_loss) {
            best_loss = traces[g].final_F_real;
            best = g;
        }
    }
    json out;
    out["grid"] = table;
    out["best_value"] = grid[best];
    out["best_final_F_real"] = best_loss;
    compoda::write_file_atomic(cfg.output_dir + "/sweep_summary.json", out.dump(2) + "\n");

    std::cout << "value        final_F_real\n";
    for (std::size_t g = 0; g < grid.size(); ++g)
        std::cout << fmt9(grid[g]) << (g == best ? "  *  " : "     ") << fmt9(traces[g].final_F_real)
                  << "\n";
    std::cout << "best: " << fmt9(grid[best]) << " (summary: " << cfg.output_dir
              << "/sweep_summary.json)\n";
    return kExitOk;
}

int cmd_check(const std::string& config_path) {
    std::vector<compoda::CheckReport> reports;
    if (config_path.empty()) {
        reports = compoda::run_check_battery();
    } else {
        compoda::ExperimentConfig cfg = compoda::parse_config(read_config_file(config_path));
        reports = compoda::run_check_battery(cfg);
    }
    bool all = true;
    for (const auto& r : reports) {
        std::cout << r.to_line() << "\n";
        all = all && r.passed;
    }
    std::cout << (all ? "all checks passed\n" : "CHECK FAILURES PRESENT\n");
    return all ? kExitOk : kExitRuntime;
}

int cmd_gen(const std::string& kind, long d, long k, double mu, long N, long classes, long seed,
            const std::string& out_file) {
    if (kind == "softmax") {
        if (d < 1 || k < 1) throw compoda::ConfigError("gen softmax: need --d and --k >= 1");
        const auto p = compoda::gen_softmax(static_cast<std::size_t>(d), static_cast<std::size_t>(k),
                                            mu, static_cast<std::uint64_t>(seed));
        compoda::write_file_atomic(out_file, compoda::softmax_instance_to_string(p));
    } else if (kind == "logistic") {
        if (N < 1 || d < 1) throw compoda::ConfigError("gen logistic: need --N and --d >= 1");
        compoda::write_file_atomic(
            out_file, compoda::gen_logistic_csv(static_cast<std::size_t>(N),
                                                static_cast<std::size_t>(d),
                                                static_cast<int>(classes),
                                                static_cast<std::uint64_t>(seed)));
    } else {
        throw compoda::ConfigError("gen: kind must be 'softmax' or 'logistic'");
    }
    std::cout << "wrote " << out_file << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"distributed composite optimization simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, grid_arg, gen_kind, out_file = "instance.txt";
    long seed = -1;
    bool debug = false;
    long gen_d = 0, gen_k = 0, gen_N = 0, gen_classes = 10, gen_seed = 1;
    double gen_mu = 0.1;

    auto* run = app.add_subcommand("run", "run one configured experiment");
    run->add_option("--config", config_path, "config JSON path")->required();
    run->add_option("--out", out_dir, "output directory override");
    run->add_option("--seed", seed, "seed override");
    run->add_flag("--debug", debug, "force debug trace retention");

    auto* sweep = app.add_subcommand("sweep", "stepsize sweep (1/gamma or h grid)");
    sweep->add_option("--config", config_path, "config JSON path")->required();
    sweep->add_option("--out", out_dir, "output directory override");
    sweep->add_option("--seed", seed, "seed override");
    sweep->add_flag("--debug", debug, "force debug trace retention");
    sweep->add_option("--grid", grid_arg, "comma-separated grid values");

    auto* check = app.add_subcommand("check", "run the invariant check battery");
    check->add_option("--config", config_path, "apply the checks to this experiment");

    auto* gen = app.add_subcommand("gen", "generate synthetic data files");
    gen->add_option("kind", gen_kind, "softmax | logistic")->required();
    gen->add_option("--d", gen_d, "dimension");
    gen->add_option("--k", gen_k, "softmax rows");
    gen->add_option("--mu", gen_mu, "softmax smoothing");
    gen->add_option("--N", gen_N, "logistic samples");
    gen->add_option("--classes", gen_classes, "logistic label count");
    gen->add_option("--seed", gen_seed, "generation seed");
    gen->add_option("--out-file", out_file, "output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error[config]: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir, seed, debug);
        if (sweep->parsed()) {
            std::vector<double> grid;
            std::size_t pos = 0;
            while (pos < grid_arg.size()) {
                std::size_t comma = grid_arg.find(',', pos);
                if (comma == std::string::npos) comma = grid_arg.size();
                grid.push_back(compoda::parse_double(grid_arg.substr(pos, comma - pos)));
                pos = comma + 1;
            }
            return cmd_sweep(config_path, out_dir, seed, debug, grid);
        }
        if (check->parsed()) return cmd_check(config_path);
        if (gen->parsed())
            return cmd_gen(gen_kind, gen_d, gen_k, gen_mu, gen_N, gen_classes, gen_seed, out_file);
    } catch (const compoda::ConfigError& e) {
        std::cerr << "error[config]: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error[runtime]: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitConfig;
}
