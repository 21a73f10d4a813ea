#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynaprune/dataset.hpp"
#include "dynaprune/learner.hpp"
#include "dynaprune/rng.hpp"
#include "dynaprune/scoreboard.hpp"

namespace dynaprune {

/// Sorted ascending, distinct row indices into the training set.
using SelectionSet = std::vector<std::int64_t>;

enum class PolicyKind {
    random,
    uncertainty,      // top-k by the latest raw loss, no filtering
    uncertainty_ema,  // top-k by EMA of the loss
    eps_greedy,
    ucb,
    static_topk,
    static_eps_greedy,
    static_ucb,
};

inline std::string policy_name(PolicyKind k) {
    switch (k) {
        case PolicyKind::random: return "random";
        case PolicyKind::uncertainty: return "uncertainty";
        case PolicyKind::uncertainty_ema: return "uncertainty_ema";
        case PolicyKind::eps_greedy: return "eps_greedy";
        case PolicyKind::ucb: return "ucb";
        case PolicyKind::static_topk: return "static_topk";
        case PolicyKind::static_eps_greedy: return "static_eps_greedy";
        case PolicyKind::static_ucb: return "static_ucb";
    }
    return "unknown";
}

inline std::optional<PolicyKind> parse_policy_kind(const std::string& name) {
    for (PolicyKind k : {PolicyKind::random, PolicyKind::uncertainty, PolicyKind::uncertainty_ema,
                         PolicyKind::eps_greedy, PolicyKind::ucb, PolicyKind::static_topk,
                         PolicyKind::static_eps_greedy, PolicyKind::static_ucb}) {
        if (policy_name(k) == name) return k;
    }
    return std::nullopt;
}

inline bool is_static_policy(PolicyKind k) {
    return k == PolicyKind::static_topk || k == PolicyKind::static_eps_greedy ||
           k == PolicyKind::static_ucb;
}

/// Dynamic non-random policies observe full-dataset losses at every
/// checkpoint; random and static ones never do.
inline bool policy_needs_scoring(PolicyKind k) {
    return k == PolicyKind::uncertainty || k == PolicyKind::uncertainty_ema ||
           k == PolicyKind::eps_greedy || k == PolicyKind::ucb;
}

struct PolicySpec {
    PolicyKind kind = PolicyKind::uncertainty_ema;
    double alpha = 0.8;    // EMA coefficient
    double epsilon = 0.1;  // eps_greedy exploration fraction
    double c = 1.0;        // UCB variance weight
    std::vector<double> static_scores;              // static kinds
    std::vector<std::vector<double>> static_trials; // static_ucb: R x N per-trial scores
    double offline_score_seconds = 0.0;             // cost of producing static scores
};

inline void validate_policy(const PolicySpec& spec, std::int64_t n = -1) {
    if (!(spec.alpha > 0.0) || spec.alpha > 1.0) {
        throw std::invalid_argument("policy: alpha must be in (0, 1]");
    }
    if (spec.epsilon < 0.0 || spec.epsilon > 1.0) {
        throw std::invalid_argument("policy: epsilon must be in [0, 1]");
    }
    if (spec.c < 0.0) throw std::invalid_argument("policy: c must be >= 0");
    if (is_static_policy(spec.kind)) {
        if (spec.static_scores.empty()) {
            throw std::invalid_argument("policy: static kinds require static scores");
        }
        if (n >= 0 && static_cast<std::int64_t>(spec.static_scores.size()) != n) {
            throw std::invalid_argument("policy: static score length does not match dataset");
        }
        if (spec.kind == PolicyKind::static_ucb && spec.static_trials.empty()) {
            throw std::invalid_argument("policy: static_ucb requires per-trial scores");
        }
    } else if (!spec.static_scores.empty()) {
        throw std::invalid_argument("policy: dynamic kinds must not carry static scores");
    }
}

/// k = round((1 - prune_rate) * N), clamped to at least one sample.
inline std::int64_t compute_k(std::int64_t n, double prune_rate) {
    if (n < 1) throw std::invalid_argument("compute_k: empty dataset");
    if (prune_rate < 0.0 || prune_rate >= 1.0) {
        throw std::invalid_argument("compute_k: prune_rate must be in [0, 1)");
    }
    const auto k = static_cast<std::int64_t>(std::llround((1.0 - prune_rate) * static_cast<double>(n)));
    return std::max<std::int64_t>(1, std::min(k, n));
}

namespace detail {

inline void check_k(std::int64_t k, std::int64_t n) {
    if (k < 1 || k > n) throw std::invalid_argument("selector: k out of range");
}

// floor((1 - eps) * k) with a nudge so exact decimal products do not land
// one ulp under an integer.
inline std::int64_t greedy_count(std::int64_t k, double eps) {
    return static_cast<std::int64_t>(std::floor((1.0 - eps) * static_cast<double>(k) + 1e-9));
}

}  // namespace detail

/// The k ids with the largest scores; ties broken by ascending id.
inline SelectionSet select_topk(std::span<const double> scores, std::int64_t k) {
    const auto n = static_cast<std::int64_t>(scores.size());
    detail::check_k(k, n);
    SelectionSet idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(),
                      [&](std::int64_t a, std::int64_t b) {
                          if (scores[static_cast<std::size_t>(a)] != scores[static_cast<std::size_t>(b)]) {
                              return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
                          }
                          return a < b;
                      });
    idx.resize(static_cast<std::size_t>(k));
    std::sort(idx.begin(), idx.end());
    return idx;
}

inline SelectionSet select_random(std::int64_t n, std::int64_t k, Rng& rng) {
    detail::check_k(k, n);
    return rng.sample_without_replacement(n, k);
}

inline SelectionSet select_uncertainty(std::span<const double> last_raw, std::int64_t k) {
    return select_topk(last_raw, k);
}

inline SelectionSet select_ema(const Scoreboard& sb, std::int64_t k) {
    return select_topk(sb.ema(), k);
}

/// floor((1-eps)*k) greedy picks by EMA plus uniform draws from the rest.
inline SelectionSet select_eps_greedy(const Scoreboard& sb, std::int64_t k, double epsilon,
                                      Rng& rng) {
    const std::int64_t n = sb.n();
    detail::check_k(k, n);
    if (epsilon < 0.0 || epsilon > 1.0) {
        throw std::invalid_argument("select_eps_greedy: epsilon must be in [0, 1]");
    }
    const std::int64_t g = detail::greedy_count(k, epsilon);
    SelectionSet greedy = (g > 0) ? select_topk(sb.ema(), g) : SelectionSet{};

    std::vector<bool> taken(static_cast<std::size_t>(n), false);
    for (std::int64_t i : greedy) taken[static_cast<std::size_t>(i)] = true;
    SelectionSet rest;
    rest.reserve(static_cast<std::size_t>(n - g));
    for (std::int64_t i = 0; i < n; ++i) {
        if (!taken[static_cast<std::size_t>(i)]) rest.push_back(i);
    }

    auto picks = rng.sample_without_replacement(static_cast<std::int64_t>(rest.size()), k - g);
    for (std::int64_t p : picks) greedy.push_back(rest[static_cast<std::size_t>(p)]);
    std::sort(greedy.begin(), greedy.end());
    return greedy;
}

/// Top-k by ema + c * var.
inline SelectionSet select_ucb(const Scoreboard& sb, std::int64_t k, double c) {
    if (c < 0.0) throw std::invalid_argument("select_ucb: c must be >= 0");
    std::vector<double> score(sb.ema());
    for (std::size_t i = 0; i < score.size(); ++i) score[i] += c * sb.var()[i];
    return select_topk(score, k);
}

/// Appendix hybrids on precomputed static scores. static_eps_greedy re-rolls
/// its random share on every call; static_ucb ranks by cross-trial
/// mean + c * population variance, identical on every call.
inline SelectionSet select_static_hybrid(const PolicySpec& spec, std::int64_t k, Rng& rng) {
    const auto n = static_cast<std::int64_t>(spec.static_scores.size());
    detail::check_k(k, n);
    if (spec.kind == PolicyKind::static_eps_greedy) {
        const std::int64_t g = detail::greedy_count(k, spec.epsilon);
        SelectionSet fixed = (g > 0) ? select_topk(spec.static_scores, g) : SelectionSet{};
        std::vector<bool> taken(static_cast<std::size_t>(n), false);
        for (std::int64_t i : fixed) taken[static_cast<std::size_t>(i)] = true;
        SelectionSet rest;
        for (std::int64_t i = 0; i < n; ++i) {
            if (!taken[static_cast<std::size_t>(i)]) rest.push_back(i);
        }
        auto picks = rng.sample_without_replacement(static_cast<std::int64_t>(rest.size()), k - g);
        for (std::int64_t p : picks) fixed.push_back(rest[static_cast<std::size_t>(p)]);
        std::sort(fixed.begin(), fixed.end());
        return fixed;
    }
    if (spec.kind == PolicyKind::static_ucb) {
        if (spec.static_trials.empty()) {
            throw std::invalid_argument("select_static_hybrid: missing per-trial scores");
        }
        const auto trials = static_cast<double>(spec.static_trials.size());
        std::vector<double> score(static_cast<std::size_t>(n), 0.0);
        for (std::int64_t i = 0; i < n; ++i) {
            double mean = 0.0;
            for (const auto& t : spec.static_trials) mean += t[static_cast<std::size_t>(i)];
            mean /= trials;
            double var = 0.0;
            for (const auto& t : spec.static_trials) {
                const double d = t[static_cast<std::size_t>(i)] - mean;
                var += d * d;
            }
            var /= trials;
            score[static_cast<std::size_t>(i)] = mean + spec.c * var;
        }
        return select_topk(score, k);
    }
    throw std::invalid_argument("select_static_hybrid: not a hybrid policy");
}

/// Dispatch a checkpoint selection for any policy kind.
inline SelectionSet select_subset(const PolicySpec& spec, const Scoreboard& sb, std::int64_t k,
                                  Rng& rng) {
    switch (spec.kind) {
        case PolicyKind::random: return select_random(sb.n(), k, rng);
        case PolicyKind::uncertainty: return select_uncertainty(sb.last_raw(), k);
        case PolicyKind::uncertainty_ema: return select_ema(sb, k);
        case PolicyKind::eps_greedy: return select_eps_greedy(sb, k, spec.epsilon, rng);
        case PolicyKind::ucb: return select_ucb(sb, k, spec.c);
        case PolicyKind::static_topk: {
            if (static_cast<std::int64_t>(spec.static_scores.size()) != sb.n()) {
                throw std::invalid_argument("select_subset: static score length mismatch");
            }
            return select_topk(spec.static_scores, k);
        }
        case PolicyKind::static_eps_greedy:
        case PolicyKind::static_ucb: {
            if (static_cast<std::int64_t>(spec.static_scores.size()) != sb.n()) {
                throw std::invalid_argument("select_subset: static score length mismatch");
            }
            return select_static_hybrid(spec, k, rng);
        }
    }
    throw std::invalid_argument("select_subset: unknown policy");
}

/// Count of correct->incorrect transitions per sample given one correctness
/// row per epoch; samples never classified correctly get the sentinel
/// (dataset size), ranking them above any attainable count.
inline std::vector<double> forget_scores_from_history(
    const std::vector<std::vector<bool>>& correctness, std::int64_t sentinel) {
    if (correctness.empty()) throw std::invalid_argument("forget scores: empty history");
    const std::size_t n = correctness.front().size();
    for (const auto& row : correctness) {
        if (row.size() != n) throw std::invalid_argument("forget scores: ragged history");
    }
    std::vector<double> scores(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::int64_t events = 0;
        bool ever = false;
        bool prev = false;
        for (std::size_t e = 0; e < correctness.size(); ++e) {
            const bool cur = correctness[e][i];
            ever = ever || cur;
            if (e > 0 && prev && !cur) ++events;
            prev = cur;
        }
        scores[i] = ever ? static_cast<double>(events) : static_cast<double>(sentinel);
    }
    return scores;
}

/// Trains a fresh learner on the full dataset for T epochs, evaluating
/// correctness after each epoch, and counts forgetting events.
inline std::vector<double> compute_forget_scores(const Dataset& ds, const LearnerConfig& cfg,
                                                 std::int64_t epochs, std::uint64_t seed) {
    if (epochs < 1) throw std::invalid_argument("compute_forget_scores: epochs must be >= 1");
    LearnerState st = init_learner(cfg, ds.dim, ds.classes, derive_seed(seed, "forget-init"));
    std::vector<std::int64_t> all(static_cast<std::size_t>(ds.n));
    std::iota(all.begin(), all.end(), 0);

    std::vector<std::vector<bool>> history;
    history.reserve(static_cast<std::size_t>(epochs));
    for (std::int64_t e = 0; e < epochs; ++e) {
        sgd_epoch(st, ds, all, lr_at(cfg.schedule, e), derive_seed(seed, "forget-epoch",
                                                                   static_cast<std::uint64_t>(e)));
        history.push_back(per_sample_correct(st, ds));
    }
    return forget_scores_from_history(history, ds.n);
}

/// Per-trial error norms: R independent learners, each trained for E epochs
/// on the full dataset, scored at the end of training.
inline std::vector<std::vector<double>> el2n_score_matrix(const Dataset& ds,
                                                          const LearnerConfig& cfg,
                                                          std::int64_t epochs,
                                                          std::span<const std::uint64_t> seeds) {
    if (seeds.empty()) throw std::invalid_argument("el2n: need at least one seed");
    if (epochs < 1) throw std::invalid_argument("el2n: epochs must be >= 1");
    std::vector<std::int64_t> all(static_cast<std::size_t>(ds.n));
    std::iota(all.begin(), all.end(), 0);

    std::vector<std::vector<double>> trials;
    trials.reserve(seeds.size());
    for (std::uint64_t s : seeds) {
        LearnerState st = init_learner(cfg, ds.dim, ds.classes, derive_seed(s, "el2n-init"));
        for (std::int64_t e = 0; e < epochs; ++e) {
            sgd_epoch(st, ds, all, lr_at(cfg.schedule, e),
                      derive_seed(s, "el2n-epoch", static_cast<std::uint64_t>(e)));
        }
        trials.push_back(per_sample_error_norm(st, ds));
    }
    return trials;
}

/// Mean error norm across the trials.
inline std::vector<double> compute_el2n_scores(const Dataset& ds, const LearnerConfig& cfg,
                                               std::int64_t trials, std::int64_t epochs,
                                               std::span<const std::uint64_t> seeds) {
    if (static_cast<std::int64_t>(seeds.size()) != trials) {
        throw std::invalid_argument("el2n: seed count must equal trial count");
    }
    auto matrix = el2n_score_matrix(ds, cfg, epochs, seeds);
    std::vector<double> mean(matrix.front().size(), 0.0);
    for (const auto& t : matrix) {
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += t[i];
    }
    for (double& v : mean) v /= static_cast<double>(trials);
    return mean;
}

// Static score file: comment header, then either (id,score) or
// (id,score_trial_1..score_trial_R). The mean column is derived on load
// when trials are present.
inline void save_static_scores(const std::string& path,
                               const std::vector<std::vector<double>>& trials,
                               const std::string& method, double scoring_seconds) {
    if (trials.empty()) throw std::invalid_argument("save_static_scores: no scores");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_static_scores: cannot open " + path);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "# dynaprune static scores v1 method=%s trials=%zu scoring_seconds=%.17g\n",
                  method.c_str(), trials.size(), scoring_seconds);
    out << buf;
    out << "id";
    if (trials.size() == 1) {
        out << ",score";
    } else {
        for (std::size_t t = 0; t < trials.size(); ++t) out << ",score_trial_" << (t + 1);
    }
    out << '\n';
    const std::size_t n = trials.front().size();
    for (std::size_t i = 0; i < n; ++i) {
        out << i;
        for (const auto& t : trials) {
            std::snprintf(buf, sizeof(buf), ",%.17g", t[i]);
            out << buf;
        }
        out << '\n';
    }
}

struct StaticScores {
    std::vector<double> mean;
    std::vector<std::vector<double>> trials;
    std::string method;
    double scoring_seconds = 0.0;
};

inline StaticScores load_static_scores(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_static_scores: cannot open " + path);
    StaticScores out;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_static_scores: empty file");
    {
        char method[64] = {0};
        unsigned long long trials = 0;
        double secs = 0.0;
        if (std::sscanf(line.c_str(), "# dynaprune static scores v1 method=%63s trials=%llu scoring_seconds=%lg",
                        method, &trials, &secs) != 3) {
            throw std::runtime_error("load_static_scores: bad header in " + path);
        }
        out.method = method;
        out.scoring_seconds = secs;
        out.trials.resize(trials);
    }
    if (!std::getline(in, line)) throw std::runtime_error("load_static_scores: missing columns");

    std::int64_t expected_id = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        if (!std::getline(ss, field, ',')) break;
        try {
            if (std::stoll(field) != expected_id) {
                throw std::runtime_error("load_static_scores: ids must be dense from 0");
            }
            std::size_t t = 0;
            while (std::getline(ss, field, ',')) {
                if (t >= out.trials.size()) {
                    throw std::runtime_error("load_static_scores: too many columns at id " +
                                             std::to_string(expected_id));
                }
                out.trials[t].push_back(std::stod(field));
                ++t;
            }
            if (t != out.trials.size()) {
                throw std::runtime_error("load_static_scores: missing columns at id " +
                                         std::to_string(expected_id));
            }
        } catch (const std::runtime_error&) {
            throw;
        } catch (const std::exception&) {
            throw std::runtime_error("load_static_scores: bad value at id " +
                                     std::to_string(expected_id) + " in " + path);
        }
        ++expected_id;
    }
    if (expected_id == 0) throw std::runtime_error("load_static_scores: no rows");

    out.mean.assign(out.trials.front().size(), 0.0);
    for (const auto& t : out.trials) {
        for (std::size_t i = 0; i < out.mean.size(); ++i) out.mean[i] += t[i];
    }
    for (double& v : out.mean) v /= static_cast<double>(out.trials.size());
    return out;
}

}  // namespace dynaprune
