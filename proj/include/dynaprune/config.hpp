#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynaprune/dataset.hpp"
#include "dynaprune/driver.hpp"
#include "dynaprune/learner.hpp"
#include "dynaprune/policies.hpp"

namespace dynaprune {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// How to materialize the train/test datasets. Imbalance and downsampling
/// apply to the training split only.
struct DatasetSpec {
    std::string kind = "blobs";  // blobs | blobs_mixed | csv
    std::int64_t n_per_class = 500;
    std::int64_t classes = 4;
    std::int64_t dim = 16;
    double spread = 0.5;
    std::uint64_t seed = 7;
    std::int64_t test_n_per_class = 0;  // 0: n_per_class / 5, at least 1
    // blobs_mixed
    double spread_easy = 0.1;
    double frac_easy = 0.0;
    double frac_hard = 0.0;
    // csv
    std::string train_path;
    std::string test_path;
    // optional corruption of the training split
    std::vector<double> imbalance_rates;
    std::int64_t downsample_per_class = 0;  // 0: none
};

struct SweepSpec {
    std::vector<double> prune_rates;
    std::vector<std::string> policies;
    std::vector<std::int64_t> pruning_periods;
    std::vector<double> epsilons;  // eps_greedy kinds only
    std::vector<double> cs;        // ucb kinds only
    std::vector<std::uint64_t> seeds;
};

struct ExperimentConfig {
    DatasetSpec dataset;
    RunConfig run;
    bool has_sweep = false;
    SweepSpec sweep;
    std::string scores_file;  // static policies; resolved to an absolute path
};

namespace detail {

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

inline std::string suggest(const std::string& key, const std::vector<std::string>& known) {
    std::string best;
    std::size_t best_d = 3;  // suggest only close matches
    for (const std::string& k : known) {
        const std::size_t d = edit_distance(key, k);
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// section -> ordered key/value pairs
using RawConfig = std::map<std::string, std::vector<std::pair<std::string, std::string>>>;

inline RawConfig read_raw_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    RawConfig raw;
    std::string line, section;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section");
            }
            section = trim(line.substr(1, line.size() - 2));
            raw[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        }
        if (section.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": key '" + key + "' outside any [section]");
        }
        raw[section].emplace_back(key, value);
    }
    return raw;
}

class SectionView {
public:
    SectionView(const RawConfig& raw, std::string name, std::vector<std::string> known)
        : name_(std::move(name)), known_(std::move(known)) {
        auto it = raw.find(name_);
        if (it != raw.end()) {
            for (const auto& [k, v] : it->second) {
                if (std::find(known_.begin(), known_.end(), k) == known_.end()) {
                    std::string msg = "config: unknown key '" + k + "' in [" + name_ + "]";
                    const std::string hint = suggest(k, known_);
                    if (!hint.empty()) msg += " (did you mean '" + hint + "'?)";
                    throw ConfigError(msg);
                }
                values_[k] = v;
            }
        }
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            std::size_t pos = 0;
            const double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigError(bad_value(key, it->second, "a real number"));
        }
    }

    std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            std::size_t pos = 0;
            const std::int64_t v = std::stoll(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigError(bad_value(key, it->second, "an integer"));
        }
    }

    std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            std::size_t pos = 0;
            const std::uint64_t v = std::stoull(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigError(bad_value(key, it->second, "a non-negative integer"));
        }
    }

    bool get_bool(const std::string& key, bool fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        const std::string& v = it->second;
        if (v == "true" || v == "yes" || v == "1") return true;
        if (v == "false" || v == "no" || v == "0") return false;
        throw ConfigError(bad_value(key, v, "true or false"));
    }

    template <typename T, typename Parse>
    std::vector<T> get_list(const std::string& key, Parse parse) const {
        auto it = values_.find(key);
        std::vector<T> out;
        if (it == values_.end()) return out;
        std::stringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            try {
                out.push_back(parse(item));
            } catch (const std::exception&) {
                throw ConfigError(bad_value(key, item, "a comma-separated list"));
            }
        }
        return out;
    }

    std::vector<double> get_double_list(const std::string& key) const {
        return get_list<double>(key, [](const std::string& s) { return std::stod(s); });
    }
    std::vector<std::int64_t> get_int_list(const std::string& key) const {
        return get_list<std::int64_t>(key, [](const std::string& s) { return std::stoll(s); });
    }
    std::vector<std::uint64_t> get_seed_list(const std::string& key) const {
        return get_list<std::uint64_t>(key, [](const std::string& s) { return std::stoull(s); });
    }
    std::vector<std::string> get_string_list(const std::string& key) const {
        return get_list<std::string>(key, [](const std::string& s) { return s; });
    }

private:
    std::string bad_value(const std::string& key, const std::string& value,
                          const std::string& expected) const {
        return "config: key '" + key + "' in [" + name_ + "]: '" + value + "' is not " + expected;
    }

    std::string name_;
    std::vector<std::string> known_;
    std::map<std::string, std::string> values_;
};

}  // namespace detail

inline ExperimentConfig parse_config(const std::string& path) {
    const detail::RawConfig raw = detail::read_raw_config(path);

    static const std::vector<std::string> sections{"dataset", "learner", "run", "policy", "sweep"};
    for (const auto& [name, _] : raw) {
        if (std::find(sections.begin(), sections.end(), name) == sections.end()) {
            std::string msg = "config: unknown section [" + name + "]";
            const std::string hint = detail::suggest(name, sections);
            if (!hint.empty()) msg += " (did you mean '" + hint + "'?)";
            throw ConfigError(msg);
        }
    }

    ExperimentConfig cfg;

    detail::SectionView dataset(raw, "dataset",
                                {"kind", "n_per_class", "classes", "dim", "spread", "seed",
                                 "test_n_per_class", "spread_easy", "frac_easy", "frac_hard",
                                 "train_path", "test_path", "imbalance_rates",
                                 "downsample_per_class"});
    DatasetSpec& d = cfg.dataset;
    d.kind = dataset.get_string("kind", d.kind);
    if (d.kind != "blobs" && d.kind != "blobs_mixed" && d.kind != "csv") {
        throw ConfigError("config: key 'kind' in [dataset] must be blobs, blobs_mixed, or csv");
    }
    d.n_per_class = dataset.get_int("n_per_class", d.n_per_class);
    d.classes = dataset.get_int("classes", d.classes);
    d.dim = dataset.get_int("dim", d.dim);
    d.spread = dataset.get_double("spread", d.spread);
    d.seed = dataset.get_seed("seed", d.seed);
    d.test_n_per_class = dataset.get_int("test_n_per_class", d.test_n_per_class);
    d.spread_easy = dataset.get_double("spread_easy", d.spread_easy);
    d.frac_easy = dataset.get_double("frac_easy", d.frac_easy);
    d.frac_hard = dataset.get_double("frac_hard", d.frac_hard);
    d.train_path = dataset.get_string("train_path", d.train_path);
    d.test_path = dataset.get_string("test_path", d.test_path);
    d.imbalance_rates = dataset.get_double_list("imbalance_rates");
    d.downsample_per_class = dataset.get_int("downsample_per_class", d.downsample_per_class);
    if (d.kind == "csv" && (d.train_path.empty() || d.test_path.empty())) {
        throw ConfigError("config: csv datasets require 'train_path' and 'test_path' in [dataset]");
    }
    if (d.kind != "csv") {
        if (d.n_per_class < 1) throw ConfigError("config: key 'n_per_class' must be >= 1");
        if (d.classes < 2) throw ConfigError("config: key 'classes' must be >= 2");
        if (d.dim < 1) throw ConfigError("config: key 'dim' must be >= 1");
        if (!(d.spread > 0.0)) throw ConfigError("config: key 'spread' must be positive");
    }

    detail::SectionView learner(raw, "learner",
                                {"arch", "hidden", "lr0", "momentum", "nesterov", "weight_decay",
                                 "batch_size", "milestones", "lr_decay"});
    LearnerConfig& l = cfg.run.learner;
    const std::string arch = learner.get_string("arch", "softmax");
    if (arch == "softmax") {
        l.arch = Arch::softmax_regression;
    } else if (arch == "mlp") {
        l.arch = Arch::mlp;
    } else {
        throw ConfigError("config: key 'arch' in [learner] must be softmax or mlp");
    }
    l.hidden = learner.get_int("hidden", l.hidden);
    l.hyper.lr0 = learner.get_double("lr0", l.hyper.lr0);
    l.hyper.momentum = learner.get_double("momentum", l.hyper.momentum);
    l.hyper.nesterov = learner.get_bool("nesterov", l.hyper.nesterov);
    l.hyper.weight_decay = learner.get_double("weight_decay", l.hyper.weight_decay);
    l.hyper.batch_size = learner.get_int("batch_size", l.hyper.batch_size);
    if (learner.has("milestones")) l.schedule.milestones = learner.get_int_list("milestones");
    l.schedule.factor = learner.get_double("lr_decay", l.schedule.factor);
    l.schedule.lr0 = l.hyper.lr0;
    if (l.hyper.batch_size < 1) throw ConfigError("config: key 'batch_size' must be >= 1");
    if (l.hyper.momentum < 0.0 || l.hyper.momentum >= 1.0) {
        throw ConfigError("config: key 'momentum' must be in [0, 1)");
    }
    if (l.hyper.weight_decay < 0.0) throw ConfigError("config: key 'weight_decay' must be >= 0");
    if (l.arch == Arch::mlp && l.hidden < 1) throw ConfigError("config: key 'hidden' must be >= 1");

    detail::SectionView run(raw, "run", {"epochs", "pruning_period", "prune_rate", "seed", "run_id"});
    cfg.run.epochs = run.get_int("epochs", cfg.run.epochs);
    cfg.run.pruning_period = run.get_int("pruning_period", cfg.run.pruning_period);
    cfg.run.prune_rate = run.get_double("prune_rate", cfg.run.prune_rate);
    cfg.run.seed = run.get_seed("seed", cfg.run.seed);
    cfg.run.run_id = run.get_string("run_id", "");
    if (cfg.run.epochs < 1) throw ConfigError("config: key 'epochs' must be >= 1");
    if (cfg.run.pruning_period < 1) throw ConfigError("config: key 'pruning_period' must be >= 1");
    if (cfg.run.epochs % cfg.run.pruning_period != 0) {
        throw ConfigError("config: key 'pruning_period' must divide 'epochs' (epochs=" +
                          std::to_string(cfg.run.epochs) + ", pruning_period=" +
                          std::to_string(cfg.run.pruning_period) + ")");
    }
    if (cfg.run.prune_rate < 0.0 || cfg.run.prune_rate >= 1.0) {
        throw ConfigError("config: key 'prune_rate' must be in [0, 1)");
    }

    detail::SectionView policy(raw, "policy", {"kind", "alpha", "epsilon", "c", "scores_file"});
    PolicySpec& p = cfg.run.policy;
    const std::string kind = policy.get_string("kind", "uncertainty_ema");
    if (auto parsed = parse_policy_kind(kind)) {
        p.kind = *parsed;
    } else {
        throw ConfigError("config: key 'kind' in [policy]: unknown policy '" + kind + "'");
    }
    p.alpha = policy.get_double("alpha", 0.8);
    p.epsilon = policy.get_double("epsilon", 0.1);
    p.c = policy.get_double("c", 1.0);
    if (!(p.alpha > 0.0) || p.alpha > 1.0) {
        throw ConfigError("config: key 'alpha' must be in (0, 1]");
    }
    if (p.epsilon < 0.0 || p.epsilon > 1.0) {
        throw ConfigError("config: key 'epsilon' must be in [0, 1]");
    }
    if (p.c < 0.0) throw ConfigError("config: key 'c' must be >= 0");

    cfg.scores_file = policy.get_string("scores_file", "");
    if (is_static_policy(p.kind)) {
        if (cfg.scores_file.empty()) {
            throw ConfigError("config: static policies require 'scores_file' in [policy]");
        }
        std::filesystem::path sf(cfg.scores_file);
        if (sf.is_relative()) sf = std::filesystem::path(path).parent_path() / sf;
        cfg.scores_file = std::filesystem::absolute(sf).lexically_normal().string();
        StaticScores scores = load_static_scores(cfg.scores_file);
        p.static_scores = std::move(scores.mean);
        p.static_trials = std::move(scores.trials);
        p.offline_score_seconds = scores.scoring_seconds;
    } else if (!cfg.scores_file.empty()) {
        throw ConfigError("config: key 'scores_file' is only valid for static policies");
    }

    detail::SectionView sweep(raw, "sweep",
                              {"prune_rates", "policies", "pruning_periods", "epsilons", "cs",
                               "seeds"});
    cfg.has_sweep = raw.count("sweep") > 0;
    if (cfg.has_sweep) {
        cfg.sweep.prune_rates = sweep.get_double_list("prune_rates");
        cfg.sweep.policies = sweep.get_string_list("policies");
        cfg.sweep.pruning_periods = sweep.get_int_list("pruning_periods");
        cfg.sweep.epsilons = sweep.get_double_list("epsilons");
        cfg.sweep.cs = sweep.get_double_list("cs");
        cfg.sweep.seeds = sweep.get_seed_list("seeds");
        for (const std::string& name : cfg.sweep.policies) {
            if (!parse_policy_kind(name)) {
                throw ConfigError("config: key 'policies' in [sweep]: unknown policy '" + name + "'");
            }
        }
    }
    return cfg;
}

/// Build the train/test pair described by the spec. Test data comes from an
/// independent seed stream (blobs) or a separate file (csv), so the splits
/// are disjoint by construction.
inline std::pair<Dataset, Dataset> build_datasets(const DatasetSpec& spec) {
    Dataset train, test;
    const std::int64_t test_n = spec.test_n_per_class > 0
                                    ? spec.test_n_per_class
                                    : std::max<std::int64_t>(1, spec.n_per_class / 5);
    if (spec.kind == "blobs") {
        train = gen_blobs(spec.n_per_class, spec.classes, spec.dim, spec.spread, spec.seed);
        test = gen_blobs(test_n, spec.classes, spec.dim, spec.spread,
                         derive_seed(spec.seed, "test-split"));
    } else if (spec.kind == "blobs_mixed") {
        train = gen_blobs_mixed(spec.n_per_class, spec.classes, spec.dim, spec.spread,
                                spec.spread_easy, spec.frac_easy, spec.frac_hard, spec.seed);
        test = gen_blobs_mixed(test_n, spec.classes, spec.dim, spec.spread, spec.spread_easy,
                               spec.frac_easy, spec.frac_hard, derive_seed(spec.seed, "test-split"));
    } else if (spec.kind == "csv") {
        train = load_csv(spec.train_path);
        test = load_csv(spec.test_path, train.dim, train.classes);
    } else {
        throw ConfigError("build_datasets: unknown dataset kind '" + spec.kind + "'");
    }

    if (!spec.imbalance_rates.empty()) {
        train = apply_imbalance(train, spec.imbalance_rates, derive_seed(spec.seed, "imbalance"));
    }
    if (spec.downsample_per_class > 0) {
        train = downsample(train, spec.downsample_per_class, derive_seed(spec.seed, "downsample"));
    }
    return {std::move(train), std::move(test)};
}

/// Expand the sweep lists against the base run config; one RunConfig per
/// grid point. epsilon varies only eps_greedy kinds, c only ucb kinds.
inline std::vector<RunConfig> expand_sweep(const ExperimentConfig& cfg) {
    const SweepSpec& sw = cfg.sweep;
    const std::vector<double> rates = sw.prune_rates.empty()
                                          ? std::vector<double>{cfg.run.prune_rate}
                                          : sw.prune_rates;
    const std::vector<std::string> policies =
        sw.policies.empty() ? std::vector<std::string>{policy_name(cfg.run.policy.kind)}
                            : sw.policies;
    const std::vector<std::int64_t> periods = sw.pruning_periods.empty()
                                                  ? std::vector<std::int64_t>{cfg.run.pruning_period}
                                                  : sw.pruning_periods;
    const std::vector<std::uint64_t> seeds =
        sw.seeds.empty() ? std::vector<std::uint64_t>{cfg.run.seed} : sw.seeds;

    std::vector<RunConfig> grid;
    for (const std::string& pol : policies) {
        const PolicyKind kind = *parse_policy_kind(pol);
        std::vector<double> epsilons{cfg.run.policy.epsilon};
        std::vector<double> cs{cfg.run.policy.c};
        if ((kind == PolicyKind::eps_greedy || kind == PolicyKind::static_eps_greedy) &&
            !sw.epsilons.empty()) {
            epsilons = sw.epsilons;
        }
        if ((kind == PolicyKind::ucb || kind == PolicyKind::static_ucb) && !sw.cs.empty()) {
            cs = sw.cs;
        }
        for (double rate : rates) {
            for (std::int64_t tp : periods) {
                for (double eps : epsilons) {
                    for (double c : cs) {
                        for (std::uint64_t seed : seeds) {
                            RunConfig rc = cfg.run;
                            rc.policy.kind = kind;
                            rc.policy.epsilon = eps;
                            rc.policy.c = c;
                            if (!is_static_policy(kind)) {
                                rc.policy.static_scores.clear();
                                rc.policy.static_trials.clear();
                                rc.policy.offline_score_seconds = 0.0;
                            } else if (rc.policy.static_scores.empty()) {
                                throw ConfigError(
                                    "config: sweep includes static policy '" + pol +
                                    "' but no scores_file was configured in [policy]");
                            }
                            rc.prune_rate = rate;
                            rc.pruning_period = tp;
                            rc.seed = seed;
                            rc.run_id.clear();
                            if (rc.epochs % tp != 0) {
                                throw ConfigError(
                                    "config: key 'pruning_periods' in [sweep]: " +
                                    std::to_string(tp) + " does not divide epochs=" +
                                    std::to_string(rc.epochs));
                            }
                            grid.push_back(std::move(rc));
                        }
                    }
                }
            }
        }
    }
    return grid;
}

/// Echo the resolved configuration; parse_config on the result reproduces it.
inline void write_config_echo(const std::string& path, const ExperimentConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_config_echo: cannot open " + path);
    char buf[256];
    const DatasetSpec& d = cfg.dataset;
    out << "[dataset]\n";
    out << "kind = " << d.kind << '\n';
    if (d.kind == "csv") {
        out << "train_path = " << d.train_path << '\n';
        out << "test_path = " << d.test_path << '\n';
    } else {
        out << "n_per_class = " << d.n_per_class << '\n';
        out << "classes = " << d.classes << '\n';
        out << "dim = " << d.dim << '\n';
        std::snprintf(buf, sizeof(buf), "spread = %.17g\n", d.spread);
        out << buf;
        out << "seed = " << d.seed << '\n';
        out << "test_n_per_class = " << d.test_n_per_class << '\n';
        if (d.kind == "blobs_mixed") {
            std::snprintf(buf, sizeof(buf), "spread_easy = %.17g\nfrac_easy = %.17g\nfrac_hard = %.17g\n",
                          d.spread_easy, d.frac_easy, d.frac_hard);
            out << buf;
        }
    }
    if (!d.imbalance_rates.empty()) {
        out << "imbalance_rates = ";
        for (std::size_t i = 0; i < d.imbalance_rates.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%s%.17g", i ? "," : "", d.imbalance_rates[i]);
            out << buf;
        }
        out << '\n';
    }
    if (d.downsample_per_class > 0) {
        out << "downsample_per_class = " << d.downsample_per_class << '\n';
    }

    const LearnerConfig& l = cfg.run.learner;
    out << "\n[learner]\n";
    out << "arch = " << (l.arch == Arch::mlp ? "mlp" : "softmax") << '\n';
    if (l.arch == Arch::mlp) out << "hidden = " << l.hidden << '\n';
    std::snprintf(buf, sizeof(buf), "lr0 = %.17g\nmomentum = %.17g\nweight_decay = %.17g\n",
                  l.hyper.lr0, l.hyper.momentum, l.hyper.weight_decay);
    out << buf;
    out << "nesterov = " << (l.hyper.nesterov ? "true" : "false") << '\n';
    out << "batch_size = " << l.hyper.batch_size << '\n';
    out << "milestones = ";
    for (std::size_t i = 0; i < l.schedule.milestones.size(); ++i) {
        out << (i ? "," : "") << l.schedule.milestones[i];
    }
    out << '\n';
    std::snprintf(buf, sizeof(buf), "lr_decay = %.17g\n", l.schedule.factor);
    out << buf;

    out << "\n[run]\n";
    out << "epochs = " << cfg.run.epochs << '\n';
    out << "pruning_period = " << cfg.run.pruning_period << '\n';
    std::snprintf(buf, sizeof(buf), "prune_rate = %.17g\n", cfg.run.prune_rate);
    out << buf;
    out << "seed = " << cfg.run.seed << '\n';
    if (!cfg.run.run_id.empty()) out << "run_id = " << cfg.run.run_id << '\n';

    const PolicySpec& p = cfg.run.policy;
    out << "\n[policy]\n";
    out << "kind = " << policy_name(p.kind) << '\n';
    std::snprintf(buf, sizeof(buf), "alpha = %.17g\nepsilon = %.17g\nc = %.17g\n", p.alpha,
                  p.epsilon, p.c);
    out << buf;
    if (!cfg.scores_file.empty()) out << "scores_file = " << cfg.scores_file << '\n';

    if (cfg.has_sweep) {
        out << "\n[sweep]\n";
        auto emit_doubles = [&](const char* key, const std::vector<double>& v) {
            if (v.empty()) return;
            out << key << " = ";
            for (std::size_t i = 0; i < v.size(); ++i) {
                std::snprintf(buf, sizeof(buf), "%s%.17g", i ? "," : "", v[i]);
                out << buf;
            }
            out << '\n';
        };
        emit_doubles("prune_rates", cfg.sweep.prune_rates);
        if (!cfg.sweep.policies.empty()) {
            out << "policies = ";
            for (std::size_t i = 0; i < cfg.sweep.policies.size(); ++i) {
                out << (i ? "," : "") << cfg.sweep.policies[i];
            }
            out << '\n';
        }
        if (!cfg.sweep.pruning_periods.empty()) {
            out << "pruning_periods = ";
            for (std::size_t i = 0; i < cfg.sweep.pruning_periods.size(); ++i) {
                out << (i ? "," : "") << cfg.sweep.pruning_periods[i];
            }
            out << '\n';
        }
        emit_doubles("epsilons", cfg.sweep.epsilons);
        emit_doubles("cs", cfg.sweep.cs);
        if (!cfg.sweep.seeds.empty()) {
            out << "seeds = ";
            for (std::size_t i = 0; i < cfg.sweep.seeds.size(); ++i) {
                out << (i ? "," : "") << cfg.sweep.seeds[i];
            }
            out << '\n';
        }
    }
}

}  // namespace dynaprune
