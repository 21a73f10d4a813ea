#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "dynaprune/dataset.hpp"
#include "dynaprune/driver.hpp"
#include "dynaprune/policies.hpp"

namespace dynaprune {

/// Per-sample selection statistics over a run's checkpoint history.
///   frac[i] = sel_count[i] / (k * P)   fraction of all selection slots
///   rate[i] = sel_count[i] / P         per-checkpoint selection rate
struct SelectionProfile {
    std::vector<double> frac;
    std::vector<double> rate;
    std::int64_t checkpoints = 0;  // P
    std::int64_t k = 0;
};

inline SelectionProfile selection_profile(const std::vector<SelectionSet>& history,
                                          std::int64_t n) {
    if (history.empty()) throw std::invalid_argument("selection_profile: empty history");
    const auto k = static_cast<std::int64_t>(history.front().size());
    if (k < 1) throw std::invalid_argument("selection_profile: empty selection set");

    std::vector<std::int64_t> counts(static_cast<std::size_t>(n), 0);
    for (const SelectionSet& set : history) {
        if (static_cast<std::int64_t>(set.size()) != k) {
            throw std::invalid_argument("selection_profile: ragged history");
        }
        for (std::int64_t id : set) {
            if (id < 0 || id >= n) {
                throw std::invalid_argument("selection_profile: id out of range");
            }
            ++counts[static_cast<std::size_t>(id)];
        }
    }

    SelectionProfile out;
    out.checkpoints = static_cast<std::int64_t>(history.size());
    out.k = k;
    out.frac.resize(static_cast<std::size_t>(n));
    out.rate.resize(static_cast<std::size_t>(n));
    const double slots = static_cast<double>(k) * static_cast<double>(out.checkpoints);
    for (std::size_t i = 0; i < counts.size(); ++i) {
        out.frac[i] = static_cast<double>(counts[i]) / slots;
        out.rate[i] = static_cast<double>(counts[i]) / static_cast<double>(out.checkpoints);
    }
    return out;
}

/// frac sorted descending then prefix-summed; ends at 1.
inline std::vector<double> cumulative_curve(const SelectionProfile& profile) {
    std::vector<double> sorted(profile.frac);
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double acc = 0.0;
    for (double& v : sorted) {
        acc += v;
        v = acc;
    }
    return sorted;
}

struct Groups {
    SelectionSet always;
    SelectionSet sometimes;
    SelectionSet never;
};

/// always: rate >= hi, never: rate <= lo, sometimes: the rest.
inline Groups classify_groups(const SelectionProfile& profile, double hi, double lo) {
    if (!(lo >= 0.0) || !(lo < hi) || !(hi <= 1.0)) {
        throw std::invalid_argument("classify_groups: need 0 <= lo < hi <= 1");
    }
    Groups g;
    for (std::size_t i = 0; i < profile.rate.size(); ++i) {
        const auto id = static_cast<std::int64_t>(i);
        if (profile.rate[i] >= hi) {
            g.always.push_back(id);
        } else if (profile.rate[i] <= lo) {
            g.never.push_back(id);
        } else {
            g.sometimes.push_back(id);
        }
    }
    return g;
}

enum class RetrainMode { original, static_sometimes, random_sometimes };

inline std::string retrain_mode_name(RetrainMode m) {
    switch (m) {
        case RetrainMode::original: return "original";
        case RetrainMode::static_sometimes: return "static_sometimes";
        case RetrainMode::random_sometimes: return "random_sometimes";
    }
    return "unknown";
}

/// A per-checkpoint selection rule distilled from a finished run.
///   original:         rerun the dynamic policy from scratch
///   static_sometimes: the same fixed top-k (by final-checkpoint scores) everywhere
///   random_sometimes: the always set plus a fresh uniform fill each checkpoint
struct RetrainPolicy {
    RetrainMode mode = RetrainMode::original;
    SelectionSet fixed;
    SelectionSet anchor;
};

inline RetrainPolicy retrain_modes(const std::vector<SelectionSet>& history,
                                   const std::vector<double>& final_scores, double prune_rate,
                                   RetrainMode mode, double hi = 0.9) {
    RetrainPolicy policy;
    policy.mode = mode;
    if (mode == RetrainMode::original) return policy;

    const auto n = static_cast<std::int64_t>(final_scores.size());
    const std::int64_t k = compute_k(n, prune_rate);
    if (mode == RetrainMode::static_sometimes) {
        policy.fixed = select_topk(final_scores, k);
        return policy;
    }

    const SelectionProfile profile = selection_profile(history, n);
    Groups g = classify_groups(profile, hi, 0.0);
    if (static_cast<std::int64_t>(g.always.size()) > k) {
        throw std::invalid_argument(
            "retrain_modes: budget k=" + std::to_string(k) + " is smaller than the always set (" +
            std::to_string(g.always.size()) + " samples); increase k (lower the prune rate)");
    }
    policy.anchor = g.always;
    return policy;
}

/// One checkpoint selection under a retrain policy (rows, not ids).
inline SelectionSet retrain_select(const RetrainPolicy& policy, std::int64_t n, std::int64_t k,
                                   Rng& rng) {
    if (policy.mode == RetrainMode::static_sometimes) {
        if (static_cast<std::int64_t>(policy.fixed.size()) != k) {
            throw std::invalid_argument("retrain_select: fixed set size does not match k");
        }
        return policy.fixed;
    }
    if (policy.mode == RetrainMode::random_sometimes) {
        SelectionSet out = policy.anchor;
        std::vector<bool> taken(static_cast<std::size_t>(n), false);
        for (std::int64_t i : out) taken[static_cast<std::size_t>(i)] = true;
        SelectionSet rest;
        for (std::int64_t i = 0; i < n; ++i) {
            if (!taken[static_cast<std::size_t>(i)]) rest.push_back(i);
        }
        const auto fill = k - static_cast<std::int64_t>(out.size());
        if (fill < 0) throw std::invalid_argument("retrain_select: anchor exceeds budget");
        auto picks = rng.sample_without_replacement(static_cast<std::int64_t>(rest.size()), fill);
        for (std::int64_t p : picks) out.push_back(rest[static_cast<std::size_t>(p)]);
        std::sort(out.begin(), out.end());
        return out;
    }
    throw std::invalid_argument("retrain_select: original mode replays the dynamic policy");
}

/// Checkpointed training where selection follows a retrain policy instead of
/// a live scoring policy. The retrain policy speaks dataset ids; they are
/// mapped onto rows of `ds` here.
inline RunRecord run_retrain(const RunConfig& cfg, const Dataset& ds, const Dataset& test_ds,
                             const RetrainPolicy& policy) {
    if (policy.mode == RetrainMode::original) return run_experiment(cfg, ds, test_ds);

    RunConfig local = cfg;
    local.policy = PolicySpec{};
    local.policy.kind = PolicyKind::random;  // no scoring; selection is overridden below
    if (local.run_id.empty()) {
        local.run_id = retrain_mode_name(policy.mode) + "_r" + std::to_string(cfg.prune_rate) +
                       "_s" + std::to_string(cfg.seed);
    }
    validate_run_config(local);

    std::unordered_map<std::int64_t, std::int64_t> id_to_row;
    id_to_row.reserve(static_cast<std::size_t>(ds.n));
    for (std::int64_t r = 0; r < ds.n; ++r) id_to_row[ds.ids[static_cast<std::size_t>(r)]] = r;
    auto map_rows = [&](const SelectionSet& ids) {
        SelectionSet rows;
        rows.reserve(ids.size());
        for (std::int64_t id : ids) {
            auto it = id_to_row.find(id);
            if (it == id_to_row.end()) {
                throw std::invalid_argument("run_retrain: id " + std::to_string(id) +
                                            " not present in dataset");
            }
            rows.push_back(it->second);
        }
        std::sort(rows.begin(), rows.end());
        return rows;
    };
    RetrainPolicy mapped;
    mapped.mode = policy.mode;
    mapped.fixed = map_rows(policy.fixed);
    mapped.anchor = map_rows(policy.anchor);

    return detail::run_loop(local, ds, test_ds, false,
                            [&mapped, &ds](const Scoreboard&, Rng& rng, std::int64_t k) {
                                return retrain_select(mapped, ds.n, k, rng);
                            });
}

/// Fig. 2-style export: position-sorted cumulative selection fractions with
/// mean and population std across trials. `cumulative_fraction` is the curve
/// of all trials' selections pooled together.
inline void write_curve_csv(const std::string& path,
                            const std::vector<SelectionProfile>& trials) {
    if (trials.empty()) throw std::invalid_argument("write_curve_csv: no trials");
    const std::size_t n = trials.front().frac.size();
    std::vector<std::vector<double>> curves;
    curves.reserve(trials.size());
    for (const auto& t : trials) {
        if (t.frac.size() != n) throw std::invalid_argument("write_curve_csv: ragged trials");
        curves.push_back(cumulative_curve(t));
    }

    SelectionProfile pooled;
    pooled.frac.assign(n, 0.0);
    for (const auto& t : trials) {
        for (std::size_t i = 0; i < n; ++i) pooled.frac[i] += t.frac[i];
    }
    for (double& v : pooled.frac) v /= static_cast<double>(trials.size());
    const std::vector<double> pooled_curve = cumulative_curve(pooled);

    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_curve_csv: cannot open " + path);
    out << "sorted_position,cumulative_fraction,mean_over_trials,std_over_trials\n";
    char buf[160];
    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0;
        for (const auto& c : curves) mean += c[i];
        mean /= static_cast<double>(curves.size());
        double var = 0.0;
        for (const auto& c : curves) {
            const double d = c[i] - mean;
            var += d * d;
        }
        var /= static_cast<double>(curves.size());
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", i + 1, pooled_curve[i], mean,
                      std::sqrt(var));
        out << buf;
    }
}

}  // namespace dynaprune
