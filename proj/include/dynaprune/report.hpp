#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "dynaprune/analysis.hpp"
#include "dynaprune/driver.hpp"

namespace dynaprune {

namespace detail {

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // population
    std::size_t n = 0;
};

inline MeanStd mean_std(const std::vector<double>& v) {
    MeanStd ms;
    ms.n = v.size();
    if (v.empty()) return ms;
    for (double x : v) ms.mean += x;
    ms.mean /= static_cast<double>(v.size());
    for (double x : v) ms.std += (x - ms.mean) * (x - ms.mean);
    ms.std = std::sqrt(ms.std / static_cast<double>(v.size()));
    return ms;
}

// Seeds aside, runs of one method share this key.
using MethodKey = std::tuple<std::string, double, std::int64_t, double, double, double>;

inline MethodKey method_key(const RunRecord& rec) {
    return {policy_name(rec.config.policy.kind), rec.config.prune_rate,
            rec.config.pruning_period, rec.config.policy.alpha, rec.config.policy.epsilon,
            rec.config.policy.c};
}

inline std::string method_slug(const MethodKey& key) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s_r%.2f_tp%lld", std::get<0>(key).c_str(),
                  std::get<1>(key), static_cast<long long>(std::get<2>(key)));
    return buf;
}

}  // namespace detail

/// Write the sweep summary: accuracy and run-time tables aggregated over
/// seeds, plus one cumulative selection curve file per method that has a
/// selection history. Diverged runs are skipped.
inline void emit_report(const std::vector<RunRecord>& records,
                        const std::filesystem::path& out_dir) {
    if (records.empty()) throw std::invalid_argument("emit_report: no records");
    std::filesystem::create_directories(out_dir);

    std::map<detail::MethodKey, std::vector<const RunRecord*>> groups;
    for (const RunRecord& rec : records) {
        if (rec.diverged) continue;
        groups[detail::method_key(rec)].push_back(&rec);
    }
    if (groups.empty()) throw std::invalid_argument("emit_report: every record failed");

    char buf[512];
    {
        std::ofstream out(out_dir / "accuracy_table.csv");
        if (!out) throw std::runtime_error("emit_report: cannot open accuracy_table.csv");
        out << "policy,prune_rate,Tp,alpha,epsilon,c,n_seeds,mean_final_test_acc,std_final_test_acc\n";
        for (const auto& [key, recs] : groups) {
            std::vector<double> accs;
            for (const RunRecord* r : recs) accs.push_back(r->final_test_acc);
            const auto ms = detail::mean_std(accs);
            std::snprintf(buf, sizeof(buf), "%s,%.17g,%lld,%.17g,%.17g,%.17g,%zu,%.17g,%.17g\n",
                          std::get<0>(key).c_str(), std::get<1>(key),
                          static_cast<long long>(std::get<2>(key)), std::get<3>(key),
                          std::get<4>(key), std::get<5>(key), ms.n, ms.mean, ms.std);
            out << buf;
        }
    }
    {
        // total_seconds includes any offline static scoring cost;
        // total_minus_offline_seconds is the measured online run time.
        std::ofstream out(out_dir / "runtime_table.csv");
        if (!out) throw std::runtime_error("emit_report: cannot open runtime_table.csv");
        out << "policy,prune_rate,Tp,n_seeds,total_seconds,total_minus_offline_seconds,"
               "score_seconds,train_seconds\n";
        for (const auto& [key, recs] : groups) {
            std::vector<double> with_offline, online, score, train;
            for (const RunRecord* r : recs) {
                with_offline.push_back(r->total_seconds + r->offline_score_seconds);
                online.push_back(r->total_seconds);
                score.push_back(r->score_seconds);
                train.push_back(r->train_seconds);
            }
            std::snprintf(buf, sizeof(buf), "%s,%.17g,%lld,%zu,%.17g,%.17g,%.17g,%.17g\n",
                          std::get<0>(key).c_str(), std::get<1>(key),
                          static_cast<long long>(std::get<2>(key)), with_offline.size(),
                          detail::mean_std(with_offline).mean, detail::mean_std(online).mean,
                          detail::mean_std(score).mean, detail::mean_std(train).mean);
            out << buf;
        }
    }
    for (const auto& [key, recs] : groups) {
        std::vector<SelectionProfile> trials;
        for (const RunRecord* r : recs) {
            if (r->history.empty()) continue;
            std::int64_t n = 0;
            for (const SelectionSet& set : r->history) {
                for (std::int64_t id : set) n = std::max(n, id + 1);
            }
            if (r->scoreboard) n = std::max(n, r->scoreboard->n());
            trials.push_back(selection_profile(r->history, n));
        }
        if (trials.empty()) continue;
        const std::size_t n = trials.front().frac.size();
        bool ragged = false;
        for (const auto& t : trials) ragged = ragged || t.frac.size() != n;
        if (ragged) continue;
        write_curve_csv((out_dir / ("curve_" + detail::method_slug(key) + ".csv")).string(),
                        trials);
    }
}

}  // namespace dynaprune
