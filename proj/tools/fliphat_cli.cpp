// Experiment harness CLI.
//
//   fliphat run --config sweep.cfg [--out-dir DIR] [--parallel N] [--plot]
//   fliphat verify --suite acceptance|quick [--parallel N]
//
// Exit codes: 0 success, 1 verification/acceptance failure, 2 config error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fliphat/experiment.hpp"
#include "fliphat/suites.hpp"

namespace {

using ordered_json = nlohmann::ordered_json;

void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << contents;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

ordered_json config_to_json(const fliphat::ExperimentConfig& cfg) {
    ordered_json j;
    j["dimensions"] = cfg.dimensions;
    ordered_json eps = ordered_json::array();
    for (double e : cfg.epsilons) eps.push_back(fliphat::detail::format_double(e));
    j["epsilons"] = eps;
    j["delta"] = cfg.delta;
    j["s_star"] = cfg.s_star;
    j["K"] = cfg.num_arms;
    j["T"] = cfg.horizon;
    j["repetitions"] = cfg.repetitions;
    j["root_seed"] = cfg.root_seed;
    j["x_max"] = cfg.x_max;
    j["ar_phi"] = cfg.ar_phi;
    j["noise_sigma"] = cfg.noise_sigma;
    j["beta_magnitude"] = cfg.beta_magnitude;
    j["s"] = cfg.policy_sparsity;
    j["M_max"] = cfg.max_iterations;
    j["kappa_bar"] = cfg.kappa_bar;
    j["kappa_under"] = cfg.kappa_under;
    j["non_private"] = cfg.non_private;
    j["parallel"] = cfg.parallelism;
    return j;
}

int run_command(const std::string& config_path, std::string out_dir, unsigned parallel_override,
                bool plot) {
    fliphat::ExperimentConfig cfg;
    try {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "config error: cannot open " << config_path << "\n";
            return 2;
        }
        cfg = fliphat::parse_experiment_config(in);
    } catch (const fliphat::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    if (parallel_override > 0) cfg.parallelism = parallel_override;

    if (out_dir.empty()) {
        const char* env = std::getenv("FLIPHAT_OUT_DIR");
        out_dir = env ? env : ".";
    }
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);

    std::cerr << "running sweep: " << cfg.dimensions.size() << " dims x " << cfg.epsilons.size()
              << " epsilons x " << cfg.repetitions << " reps, T=" << cfg.horizon << ", "
              << cfg.parallelism << " worker(s)\n";
    fliphat::SweepResult result = fliphat::run_sweep(cfg);

    write_file(dir / "raw.csv", fliphat::raw_csv(result));
    write_file(dir / "aggregate.csv", fliphat::aggregate_csv(result));

    ordered_json ledger = ordered_json::array();
    for (const fliphat::CellResult& c : result.cells) {
        ordered_json entry;
        entry["d"] = c.dim;
        entry["epsilon"] = fliphat::detail::format_double(c.epsilon);
        entry["repetition"] = c.repetition;
        entry["max_user_epsilon"] = fliphat::detail::format_double(c.max_user_epsilon);
        entry["max_user_delta"] = fliphat::detail::format_double(c.max_user_delta);
        entry["ledger_entries"] = c.ledger_entries;
        entry["iteration_cap_hit"] = c.iteration_cap_hit;
        ledger.push_back(std::move(entry));
    }
    write_file(dir / "ledger.json", ledger.dump(2) + "\n");

    ordered_json meta;
    meta["version"] = "0.1.0";
    meta["config"] = config_to_json(cfg);
    write_file(dir / "run_meta.json", meta.dump(2) + "\n");

    if (plot) write_file(dir / "regret_vs_d.svg", fliphat::render_svg(result));

    std::cerr << "wrote results to " << dir.string() << "\n";
    return 0;
}

int verify_command(const std::string& suite) {
    std::vector<fliphat::CheckResult> results;
    if (suite == "acceptance") {
        results = fliphat::run_acceptance_suite();
    } else if (suite == "quick") {
        results = fliphat::run_quick_suite();
    } else {
        std::cerr << "config error: unknown suite '" << suite << "' (expected acceptance|quick)\n";
        return 2;
    }

    bool all_ok = true;
    for (const fliphat::CheckResult& r : results) {
        std::printf("[%s] %s  %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                    r.detail.c_str());
        all_ok = all_ok && r.passed;
    }
    return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Joint-DP sparse linear contextual bandit experiment harness"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    unsigned parallel = 0;
    bool plot = false;
    CLI::App* run = app.add_subcommand("run", "Execute a sweep from a config file");
    run->add_option("--config", config_path, "Flat key=value config file")->required();
    run->add_option("--out-dir", out_dir,
                    "Output directory (default: $FLIPHAT_OUT_DIR or current directory)");
    run->add_option("--parallel", parallel, "Worker count override");
    run->add_flag("--plot", plot, "Also render regret_vs_d.svg");

    std::string suite = "quick";
    CLI::App* verify = app.add_subcommand("verify", "Run a built-in verification suite");
    verify->add_option("--suite", suite, "Suite name: acceptance or quick")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return run_command(config_path, out_dir, parallel, plot);
        return verify_command(suite);
    } catch (const fliphat::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
