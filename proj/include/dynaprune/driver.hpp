#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynaprune/dataset.hpp"
#include "dynaprune/learner.hpp"
#include "dynaprune/policies.hpp"
#include "dynaprune/rng.hpp"
#include "dynaprune/scoreboard.hpp"

namespace dynaprune {

struct RunConfig {
    std::int64_t epochs = 60;         // T
    std::int64_t pruning_period = 10; // Tp
    double prune_rate = 0.5;
    PolicySpec policy;
    LearnerConfig learner;
    std::uint64_t seed = 1;
    std::string run_id;  // filled from the fields when empty
};

inline void validate_run_config(const RunConfig& cfg) {
    if (cfg.epochs < 1) throw std::invalid_argument("run config: epochs must be >= 1");
    if (cfg.pruning_period < 1) throw std::invalid_argument("run config: pruning_period must be >= 1");
    if (cfg.epochs % cfg.pruning_period != 0) {
        throw std::invalid_argument("run config: epochs (" + std::to_string(cfg.epochs) +
                                    ") must be divisible by pruning_period (" +
                                    std::to_string(cfg.pruning_period) + ")");
    }
    if (cfg.prune_rate < 0.0 || cfg.prune_rate >= 1.0) {
        throw std::invalid_argument("run config: prune_rate must be in [0, 1)");
    }
    validate_policy(cfg.policy);
}

inline std::string default_run_id(const RunConfig& cfg) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s_r%.2f_tp%lld_s%llu", policy_name(cfg.policy.kind).c_str(),
                  cfg.prune_rate, static_cast<long long>(cfg.pruning_period),
                  static_cast<unsigned long long>(cfg.seed));
    return buf;
}

struct EpochRow {
    std::int64_t epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double test_acc = 0.0;
    std::int64_t batches = 0;
};

struct RunRecord {
    RunConfig config;
    std::string run_id;
    std::int64_t k = 0;
    std::vector<SelectionSet> history;  // per checkpoint, original dataset ids, sorted
    std::vector<EpochRow> epochs;
    double final_test_acc = 0.0;
    double score_seconds = 0.0;  // online scoring (full-dataset evals + observe)
    double train_seconds = 0.0;
    double total_seconds = 0.0;
    double offline_score_seconds = 0.0;  // static policies: precomputed score cost
    std::int64_t total_minibatches = 0;
    std::int64_t n_score_evals = 0;  // full-dataset loss evaluations
    std::optional<Scoreboard> scoreboard;
    bool diverged = false;
    std::string error;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline SelectionSet rows_to_ids(const Dataset& ds, const SelectionSet& rows) {
    SelectionSet ids;
    ids.reserve(rows.size());
    for (std::int64_t r : rows) ids.push_back(ds.ids[static_cast<std::size_t>(r)]);
    std::sort(ids.begin(), ids.end());
    return ids;
}

// Scoreboard seeding: scored policies start from the random model's losses
// (one full-dataset evaluation), everything else from zeros.
inline Scoreboard seed_scoreboard(const LearnerState& st, const Dataset& ds,
                                  const PolicySpec& policy, RunRecord& rec) {
    if (policy_needs_scoring(policy.kind)) {
        const auto t0 = Clock::now();
        auto raw = per_sample_loss(st, ds);
        rec.score_seconds += seconds_since(t0);
        rec.n_score_evals += 1;
        return init_scores(std::move(raw), policy.alpha);
    }
    return init_scores(std::vector<double>(static_cast<std::size_t>(ds.n), 0.0), policy.alpha);
}

// Core checkpointed loop shared by the policy runs and the retrain modes.
// select_fn maps (scoreboard, rng, k) -> row selection for one checkpoint.
template <typename SelectFn>
RunRecord run_loop(const RunConfig& cfg, const Dataset& ds, const Dataset& test_ds,
                   bool needs_scoring, SelectFn&& select_fn) {
    RunRecord rec;
    rec.config = cfg;
    rec.run_id = cfg.run_id.empty() ? default_run_id(cfg) : cfg.run_id;
    rec.k = compute_k(ds.n, cfg.prune_rate);
    rec.offline_score_seconds = cfg.policy.offline_score_seconds;

    const auto t_start = Clock::now();
    LearnerState st = init_learner(cfg.learner, ds.dim, ds.classes, derive_seed(cfg.seed, "init"));
    Rng policy_rng(derive_seed(cfg.seed, "policy"));
    Scoreboard sb = seed_scoreboard(st, ds, cfg.policy, rec);

    const std::int64_t passes = cfg.epochs / cfg.pruning_period;
    try {
        for (std::int64_t p = 0; p < passes; ++p) {
            if (needs_scoring) {
                const auto t0 = Clock::now();
                auto raw = per_sample_loss(st, ds);
                sb.observe(raw);
                rec.score_seconds += seconds_since(t0);
                rec.n_score_evals += 1;
            }
            SelectionSet rows = select_fn(sb, policy_rng, rec.k);
            sb.record_selection(rows);
            rec.history.push_back(rows_to_ids(ds, rows));

            for (std::int64_t e = 0; e < cfg.pruning_period; ++e) {
                const std::int64_t epoch = p * cfg.pruning_period + e;
                const double lr = lr_at(cfg.learner.schedule, epoch);
                const auto t0 = Clock::now();
                EpochResult er = sgd_epoch(st, ds, rows, lr,
                                           derive_seed(cfg.seed, "epoch",
                                                       static_cast<std::uint64_t>(epoch)));
                rec.train_seconds += seconds_since(t0);
                rec.total_minibatches += er.batches;
                EpochRow row{epoch, lr, er.mean_loss, er.accuracy, accuracy(st, test_ds), er.batches};
                rec.epochs.push_back(row);
            }
        }
    } catch (const DivergenceError& e) {
        rec.diverged = true;
        rec.error = e.what();
    }

    if (!rec.epochs.empty()) rec.final_test_acc = rec.epochs.back().test_acc;
    rec.scoreboard = std::move(sb);
    rec.total_seconds = seconds_since(t_start);
    return rec;
}

}  // namespace detail

/// Algorithm: for each of T/Tp passes, observe full-dataset losses (scored
/// policies only), select k rows, then train Tp epochs on them.
inline RunRecord run_experiment(const RunConfig& cfg, const Dataset& ds, const Dataset& test_ds) {
    validate_run_config(cfg);
    validate_policy(cfg.policy, ds.n);
    const bool scoring = policy_needs_scoring(cfg.policy.kind);
    return detail::run_loop(cfg, ds, test_ds, scoring,
                            [&cfg](const Scoreboard& sb, Rng& rng, std::int64_t k) {
                                return select_subset(cfg.policy, sb, k, rng);
                            });
}

/// Conventional full-dataset training; no checkpoints, no scoreboard.
inline RunRecord baseline_run(const RunConfig& cfg, const Dataset& ds, const Dataset& test_ds) {
    RunConfig base = cfg;
    base.prune_rate = 0.0;
    base.pruning_period = cfg.epochs;  // single segment
    base.policy = PolicySpec{};
    base.policy.kind = PolicyKind::random;  // equivalent at rate 0; label only
    if (base.run_id.empty()) {
        base.run_id = "baseline_s" + std::to_string(cfg.seed);
    }
    validate_run_config(base);

    RunRecord rec = detail::run_loop(base, ds, test_ds, false,
                                     [&ds](const Scoreboard&, Rng&, std::int64_t) {
                                         SelectionSet all(static_cast<std::size_t>(ds.n));
                                         std::iota(all.begin(), all.end(), 0);
                                         return all;
                                     });
    rec.run_id = base.run_id;
    rec.history.clear();  // a baseline has no pruning checkpoints
    rec.scoreboard.reset();
    return rec;
}

/// One run per grid point; each completed record is handed to `sink`
/// immediately so partial sweeps survive interruption. Failures are
/// recorded (diverged flag or error string) and the sweep continues.
inline std::vector<RunRecord> run_sweep(const std::vector<RunConfig>& grid, const Dataset& ds,
                                        const Dataset& test_ds,
                                        const std::function<void(const RunRecord&)>& sink = {}) {
    if (grid.empty()) throw std::invalid_argument("run_sweep: empty grid");
    std::vector<RunRecord> records;
    records.reserve(grid.size());
    for (const RunConfig& cfg : grid) {
        RunRecord rec;
        try {
            rec = run_experiment(cfg, ds, test_ds);
        } catch (const std::exception& e) {
            rec.config = cfg;
            rec.run_id = cfg.run_id.empty() ? default_run_id(cfg) : cfg.run_id;
            rec.diverged = true;
            rec.error = e.what();
        }
        if (sink) sink(rec);
        records.push_back(std::move(rec));
    }
    return records;
}

// --- persistence ---------------------------------------------------------

inline void write_history_file(const std::string& path, const std::vector<SelectionSet>& history) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_history_file: cannot open " + path);
    for (std::size_t p = 0; p < history.size(); ++p) {
        out << p;
        for (std::int64_t id : history[p]) out << ' ' << id;
        out << '\n';
    }
}

inline std::vector<SelectionSet> read_history_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_history_file: cannot open " + path);
    std::vector<SelectionSet> history;
    std::string line;
    std::int64_t expected = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::int64_t idx = -1;
        if (!(ss >> idx) || idx != expected) {
            throw std::runtime_error("read_history_file: bad checkpoint index at line " +
                                     std::to_string(expected + 1));
        }
        SelectionSet set;
        std::int64_t id;
        while (ss >> id) set.push_back(id);
        history.push_back(std::move(set));
        ++expected;
    }
    if (history.empty()) throw std::runtime_error("read_history_file: empty history");
    return history;
}

inline const char* results_csv_header() {
    return "run_id,policy,prune_rate,Tp,alpha,epsilon,c,seed,final_test_acc,"
           "score_seconds,train_seconds,total_seconds";
}

inline void append_results_row(const std::string& path, const RunRecord& rec) {
    const bool fresh = !std::filesystem::exists(path);
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("append_results_row: cannot open " + path);
    if (fresh) out << results_csv_header() << '\n';
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%lld,%.17g,%.17g,%.17g,%llu,%.17g,%.6f,%.6f,%.6f\n",
                  rec.run_id.c_str(), policy_name(rec.config.policy.kind).c_str(),
                  rec.config.prune_rate, static_cast<long long>(rec.config.pruning_period),
                  rec.config.policy.alpha, rec.config.policy.epsilon, rec.config.policy.c,
                  static_cast<unsigned long long>(rec.config.seed), rec.final_test_acc,
                  rec.score_seconds, rec.train_seconds, rec.total_seconds);
    out << buf;
}

inline void write_epochs_csv(const std::string& path, const RunRecord& rec) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_epochs_csv: cannot open " + path);
    out << "epoch,lr,train_loss,train_acc,test_acc,batches\n";
    char buf[256];
    for (const EpochRow& row : rec.epochs) {
        std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,%.17g,%lld\n",
                      static_cast<long long>(row.epoch), row.lr, row.train_loss, row.train_acc,
                      row.test_acc, static_cast<long long>(row.batches));
        out << buf;
    }
}

inline void write_run_meta(const std::string& path, const RunRecord& rec) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_run_meta: cannot open " + path);
    out << "run_id,k,checkpoints,total_minibatches,n_score_evals,offline_score_seconds,diverged\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%lld,%zu,%lld,%lld,%.6f,%d\n", rec.run_id.c_str(),
                  static_cast<long long>(rec.k), rec.history.size(),
                  static_cast<long long>(rec.total_minibatches),
                  static_cast<long long>(rec.n_score_evals), rec.offline_score_seconds,
                  rec.diverged ? 1 : 0);
    out << buf;
}

/// Persist one run under <out_dir>/<run_id>/ and append its results row.
inline std::filesystem::path write_run_dir(const std::filesystem::path& out_dir,
                                           const RunRecord& rec) {
    const auto dir = out_dir / rec.run_id;
    std::filesystem::create_directories(dir);
    append_results_row((out_dir / "results.csv").string(), rec);
    if (!rec.history.empty()) write_history_file((dir / "history.txt").string(), rec.history);
    write_epochs_csv((dir / "epochs.csv").string(), rec);
    write_run_meta((dir / "run_meta.csv").string(), rec);
    if (rec.scoreboard) rec.scoreboard->save((dir / "scoreboard.csv").string());
    return dir;
}

}  // namespace dynaprune
