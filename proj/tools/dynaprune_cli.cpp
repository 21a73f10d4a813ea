// Command-line front end: run/sweep/baseline experiments, offline static
// scoring, selection analysis, and the retrain-from-history modes.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dynaprune/dynaprune.hpp"

namespace fs = std::filesystem;
using namespace dynaprune;

namespace {

int verbosity = 1;

void info(const std::string& msg) {
    if (verbosity > 0) std::cout << msg << '\n';
}

ExperimentConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
    ExperimentConfig cfg = parse_config(path);
    if (seed_override) cfg.run.seed = *seed_override;
    return cfg;
}

void persist_run(const fs::path& out, const ExperimentConfig& cfg, const RunRecord& rec) {
    const fs::path dir = write_run_dir(out, rec);
    ExperimentConfig echo = cfg;
    echo.run = rec.config;
    echo.run.run_id = rec.run_id;
    echo.has_sweep = false;
    write_config_echo((dir / "config.ini").string(), echo);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s: final_test_acc=%.4f total=%.3fs (score %.3fs, train %.3fs)",
                  rec.run_id.c_str(), rec.final_test_acc, rec.total_seconds, rec.score_seconds,
                  rec.train_seconds);
    info(buf);
    if (rec.diverged) info("  warning: run aborted early: " + rec.error);
}

int cmd_run(const std::string& config_path, const std::string& out,
            std::optional<std::uint64_t> seed) {
    ExperimentConfig cfg = load_config(config_path, seed);
    auto [train, test] = build_datasets(cfg.dataset);
    info("dataset: n=" + std::to_string(train.n) + " d=" + std::to_string(train.dim) +
         " classes=" + std::to_string(train.classes) + " (test n=" + std::to_string(test.n) + ")");
    RunRecord rec = run_experiment(cfg.run, train, test);
    persist_run(out, cfg, rec);
    if (!rec.diverged) emit_report({rec}, fs::path(out) / "report");
    return rec.diverged ? 1 : 0;
}

int cmd_baseline(const std::string& config_path, const std::string& out,
                 std::optional<std::uint64_t> seed) {
    ExperimentConfig cfg = load_config(config_path, seed);
    auto [train, test] = build_datasets(cfg.dataset);
    RunRecord rec = baseline_run(cfg.run, train, test);
    persist_run(out, cfg, rec);
    return rec.diverged ? 1 : 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out, int jobs) {
    ExperimentConfig cfg = parse_config(config_path);
    auto [train, test] = build_datasets(cfg.dataset);
    std::vector<RunConfig> grid = expand_sweep(cfg);
    info("sweep: " + std::to_string(grid.size()) + " runs, jobs=" + std::to_string(jobs));
    fs::create_directories(out);

    std::vector<RunRecord> records(grid.size());
    if (jobs <= 1) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            records[i] = run_sweep({grid[i]}, train, test).front();
            persist_run(out, cfg, records[i]);
        }
    } else {
        // Workers fill records; one writer persists them in grid order so
        // results.csv stays deterministic and partial sweeps keep a prefix.
        std::atomic<std::size_t> next{0};
        std::vector<char> done(grid.size(), 0);
        std::mutex mu;
        std::condition_variable cv;
        auto worker = [&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= grid.size()) return;
                RunRecord rec = run_sweep({grid[i]}, train, test).front();
                {
                    std::lock_guard<std::mutex> lock(mu);
                    records[i] = std::move(rec);
                    done[i] = 1;
                }
                cv.notify_all();
            }
        };
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        {
            std::unique_lock<std::mutex> lock(mu);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                cv.wait(lock, [&] { return done[i] == 1; });
                persist_run(out, cfg, records[i]);
            }
        }
        for (auto& t : pool) t.join();
    }

    emit_report(records, fs::path(out) / "report");
    info("report written to " + (fs::path(out) / "report").string());
    int failures = 0;
    for (const RunRecord& rec : records) failures += rec.diverged ? 1 : 0;
    return failures > 0 ? 1 : 0;
}

int cmd_analyze(const std::string& history_path, const std::string& out, double hi, double lo,
                std::int64_t n_override) {
    auto history = read_history_file(history_path);
    std::int64_t n = n_override;
    if (n <= 0) {
        for (const SelectionSet& set : history) {
            for (std::int64_t id : set) n = std::max(n, id + 1);
        }
    }
    const SelectionProfile profile = selection_profile(history, n);
    const Groups groups = classify_groups(profile, hi, lo);

    fs::create_directories(out);
    write_curve_csv((fs::path(out) / "curve.csv").string(), {profile});
    {
        std::ofstream gout(fs::path(out) / "groups.csv");
        gout << "group,count,fraction\n";
        char buf[128];
        auto row = [&](const char* name, std::size_t count) {
            std::snprintf(buf, sizeof(buf), "%s,%zu,%.17g\n", name, count,
                          static_cast<double>(count) / static_cast<double>(n));
            gout << buf;
        };
        row("always", groups.always.size());
        row("sometimes", groups.sometimes.size());
        row("never", groups.never.size());
    }
    {
        std::ofstream pout(fs::path(out) / "profile.csv");
        pout << "id,frac,rate\n";
        char buf[128];
        for (std::size_t i = 0; i < profile.frac.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", i, profile.frac[i],
                          profile.rate[i]);
            pout << buf;
        }
    }
    char buf[256];
    std::snprintf(buf, sizeof(buf), "n=%lld checkpoints=%lld k=%lld always=%zu sometimes=%zu never=%zu",
                  static_cast<long long>(n), static_cast<long long>(profile.checkpoints),
                  static_cast<long long>(profile.k), groups.always.size(),
                  groups.sometimes.size(), groups.never.size());
    info(buf);
    return 0;
}

int cmd_retrain(const std::string& history_arg, const std::string& mode_name,
                const std::string& out, std::optional<std::uint64_t> seed, double hi) {
    fs::path history_path(history_arg);
    if (fs::is_directory(history_path)) history_path /= "history.txt";
    const fs::path run_dir = history_path.parent_path();
    const fs::path config_path = run_dir / "config.ini";
    const fs::path scoreboard_path = run_dir / "scoreboard.csv";
    if (!fs::exists(config_path) || !fs::exists(scoreboard_path)) {
        std::cerr << "retrain: expected config.ini and scoreboard.csv next to " << history_path
                  << " (as written by `run`)\n";
        return 2;
    }

    RetrainMode mode;
    if (mode_name == "original") {
        mode = RetrainMode::original;
    } else if (mode_name == "static_sometimes") {
        mode = RetrainMode::static_sometimes;
    } else if (mode_name == "random_sometimes") {
        mode = RetrainMode::random_sometimes;
    } else {
        std::cerr << "retrain: unknown mode '" << mode_name
                  << "' (expected original, static_sometimes, or random_sometimes)\n";
        return 2;
    }

    ExperimentConfig cfg = load_config(config_path.string(), seed);
    auto [train, test] = build_datasets(cfg.dataset);
    for (std::int64_t r = 0; r < train.n; ++r) {
        if (train.ids[static_cast<std::size_t>(r)] != r) {
            std::cerr << "retrain: requires dense sample ids (0..N-1); this run's dataset was "
                         "subsetted\n";
            return 2;
        }
    }

    auto history = read_history_file(history_path.string());
    Scoreboard sb = Scoreboard::load(scoreboard_path.string());
    RetrainPolicy policy = retrain_modes(history, sb.ema(), cfg.run.prune_rate, mode, hi);

    RunConfig rc = cfg.run;
    rc.run_id = retrain_mode_name(mode) + "_" + rc.run_id;
    RunRecord rec = run_retrain(rc, train, test, policy);
    persist_run(out, cfg, rec);
    return rec.diverged ? 1 : 0;
}

int cmd_score_static(const std::string& method, const std::string& config_path,
                     const std::string& out_file, std::int64_t trials, std::int64_t epochs) {
    ExperimentConfig cfg = parse_config(config_path);
    auto [train, test] = build_datasets(cfg.dataset);
    (void)test;
    // forget scores span a full training run by default; EL2N uses short ones
    if (epochs <= 0) epochs = (method == "forget") ? cfg.run.epochs : 5;

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::vector<double>> matrix;
    if (method == "forget") {
        matrix.push_back(compute_forget_scores(train, cfg.run.learner, epochs, cfg.run.seed));
    } else if (method == "el2n") {
        std::vector<std::uint64_t> seeds;
        for (std::int64_t r = 0; r < trials; ++r) {
            seeds.push_back(derive_seed(cfg.run.seed, "el2n-trial", static_cast<std::uint64_t>(r)));
        }
        matrix = el2n_score_matrix(train, cfg.run.learner, epochs, seeds);
    } else {
        std::cerr << "score-static: unknown method '" << method << "' (expected forget or el2n)\n";
        return 2;
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (fs::path(out_file).has_parent_path()) {
        fs::create_directories(fs::path(out_file).parent_path());
    }
    save_static_scores(out_file, matrix, method, seconds);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s scores for %lld samples written to %s (%.3fs)",
                  method.c_str(), static_cast<long long>(train.n), out_file.c_str(), seconds);
    info(buf);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dynaprune: dynamic data pruning experiments"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", history, mode = "random_sometimes";
    std::string method = "el2n", scores_out = "scores.csv";
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    double hi = 0.9, lo = 0.1;
    std::int64_t n_override = 0, trials = 5, epochs = 0;

    app.add_flag_function("-q,--quiet", [](std::int64_t) { verbosity = 0; }, "Suppress progress output");

    auto* run = app.add_subcommand("run", "Run one pruning experiment");
    run->add_option("--config", config_path, "Experiment config file")->required();
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--seed", seed, "Override [run] seed");

    auto* sweep = app.add_subcommand("sweep", "Run a config-defined grid of experiments");
    sweep->add_option("--config", config_path, "Experiment config file")->required();
    sweep->add_option("--out", out_dir, "Output directory");
    sweep->add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);

    auto* baseline = app.add_subcommand("baseline", "Full-dataset training, no pruning");
    baseline->add_option("--config", config_path, "Experiment config file")->required();
    baseline->add_option("--out", out_dir, "Output directory");
    baseline->add_option("--seed", seed, "Override [run] seed");

    auto* analyze = app.add_subcommand("analyze", "Selection distribution of a finished run");
    analyze->add_option("--history", history, "history.txt from a run directory")->required();
    analyze->add_option("--out", out_dir, "Output directory");
    analyze->add_option("--hi", hi, "Always-set rate threshold");
    analyze->add_option("--lo", lo, "Never-set rate threshold");
    analyze->add_option("--n", n_override, "Dataset size (default: inferred from history)");

    auto* retrain = app.add_subcommand("retrain", "Re-train using a previous run's selections");
    retrain->add_option("--history", history, "history.txt (or its run directory)")->required();
    retrain->add_option("--mode", mode, "original | static_sometimes | random_sometimes");
    retrain->add_option("--out", out_dir, "Output directory");
    retrain->add_option("--seed", seed, "Seed for the fresh training run");
    retrain->add_option("--hi", hi, "Always-set rate threshold");

    auto* score = app.add_subcommand("score-static", "Precompute forget or EL2N scores");
    score->add_option("--method", method, "forget | el2n")->required();
    score->add_option("--config", config_path, "Experiment config file")->required();
    score->add_option("--out", scores_out, "Output scores CSV");
    score->add_option("--trials", trials, "EL2N: number of independent models");
    score->add_option("--epochs", epochs,
                      "Training epochs per scoring model (default: [run] epochs for forget, 5 for el2n)");

    // lets global flags like -q appear after the subcommand
    for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir, seed);
        if (sweep->parsed()) return cmd_sweep(config_path, out_dir, jobs);
        if (baseline->parsed()) return cmd_baseline(config_path, out_dir, seed);
        if (analyze->parsed()) return cmd_analyze(history, out_dir, hi, lo, n_override);
        if (retrain->parsed()) return cmd_retrain(history, mode, out_dir, seed, hi);
        if (score->parsed()) return cmd_score_static(method, config_path, scores_out, trials, epochs);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
