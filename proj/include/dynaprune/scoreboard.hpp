#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynaprune {

/// Streaming per-sample statistics across scoring checkpoints.
///
/// observe() applies, per element and in this order:
///   var  <- (1 - alpha) * var + alpha * (raw - ema)^2   (pre-update ema)
///   ema  <- alpha * raw + (1 - alpha) * ema
/// The variance recurrence intentionally uses the mean from the previous
/// checkpoint, not the freshly updated one.
class Scoreboard {
public:
    Scoreboard(std::vector<double> raw, double alpha) : alpha_(alpha) {
        if (raw.empty()) throw std::invalid_argument("Scoreboard: empty scoreboard");
        if (!(alpha > 0.0) || alpha > 1.0) {
            throw std::invalid_argument("Scoreboard: alpha must be in (0, 1]");
        }
        for (double v : raw) {
            if (!std::isfinite(v)) throw std::invalid_argument("Scoreboard: non-finite input");
        }
        ema_ = raw;
        last_raw_ = std::move(raw);
        var_.assign(ema_.size(), 0.0);
        sel_count_.assign(ema_.size(), 0);
    }

    std::int64_t n() const { return static_cast<std::int64_t>(ema_.size()); }
    double alpha() const { return alpha_; }
    std::int64_t checkpoints_seen() const { return checkpoints_seen_; }
    const std::vector<double>& ema() const { return ema_; }
    const std::vector<double>& var() const { return var_; }
    const std::vector<double>& last_raw() const { return last_raw_; }
    const std::vector<std::int64_t>& sel_count() const { return sel_count_; }

    void observe(std::span<const double> raw) {
        if (static_cast<std::int64_t>(raw.size()) != n()) {
            throw std::invalid_argument("Scoreboard::observe: length mismatch");
        }
        for (double v : raw) {
            if (!std::isfinite(v)) throw std::invalid_argument("Scoreboard::observe: non-finite input");
        }
        for (std::size_t i = 0; i < ema_.size(); ++i) {
            const double delta = raw[i] - ema_[i];
            var_[i] = (1.0 - alpha_) * var_[i] + alpha_ * delta * delta;
            ema_[i] = alpha_ * raw[i] + (1.0 - alpha_) * ema_[i];
            last_raw_[i] = raw[i];
        }
        ++checkpoints_seen_;
    }

    void record_selection(std::span<const std::int64_t> selected) {
        for (std::int64_t i : selected) {
            if (i < 0 || i >= n()) {
                throw std::invalid_argument("Scoreboard::record_selection: id out of range");
            }
            ++sel_count_[static_cast<std::size_t>(i)];
        }
    }

    bool operator==(const Scoreboard& other) const {
        return alpha_ == other.alpha_ && checkpoints_seen_ == other.checkpoints_seen_ &&
               ema_ == other.ema_ && var_ == other.var_ && last_raw_ == other.last_raw_ &&
               sel_count_ == other.sel_count_;
    }

    /// Versioned CSV snapshot; restore() round-trips bit-exactly.
    std::string snapshot() const {
        std::ostringstream out;
        char buf[128];
        std::snprintf(buf, sizeof(buf), "# dynaprune scoreboard v1 alpha=%.17g checkpoints_seen=%lld n=%lld\n",
                      alpha_, static_cast<long long>(checkpoints_seen_), static_cast<long long>(n()));
        out << buf;
        out << "id,ema,var,last_raw,sel_count\n";
        for (std::size_t i = 0; i < ema_.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%lld\n", i, ema_[i], var_[i],
                          last_raw_[i], static_cast<long long>(sel_count_[i]));
            out << buf;
        }
        return out.str();
    }

    static Scoreboard restore(const std::string& bytes) {
        std::istringstream in(bytes);
        std::string line;
        if (!std::getline(in, line)) corrupt("missing header");
        double alpha = 0.0;
        long long seen = 0, count = 0;
        if (std::sscanf(line.c_str(), "# dynaprune scoreboard v1 alpha=%lg checkpoints_seen=%lld n=%lld",
                        &alpha, &seen, &count) != 3) {
            corrupt("bad header");
        }
        if (!std::getline(in, line) || line != "id,ema,var,last_raw,sel_count") {
            corrupt("bad column header");
        }
        if (count < 1) corrupt("bad sample count");

        std::vector<double> ema(static_cast<std::size_t>(count));
        std::vector<double> var(static_cast<std::size_t>(count));
        std::vector<double> raw(static_cast<std::size_t>(count));
        std::vector<std::int64_t> sel(static_cast<std::size_t>(count));
        for (long long i = 0; i < count; ++i) {
            if (!std::getline(in, line)) corrupt("truncated");
            long long id = -1, sc = 0;
            double e = 0.0, v = 0.0, r = 0.0;
            if (std::sscanf(line.c_str(), "%lld,%lg,%lg,%lg,%lld", &id, &e, &v, &r, &sc) != 5 ||
                id != i) {
                corrupt("bad row " + std::to_string(i));
            }
            ema[static_cast<std::size_t>(i)] = e;
            var[static_cast<std::size_t>(i)] = v;
            raw[static_cast<std::size_t>(i)] = r;
            sel[static_cast<std::size_t>(i)] = sc;
        }

        Scoreboard sb(std::move(raw), alpha);
        sb.ema_ = std::move(ema);
        sb.var_ = std::move(var);
        sb.sel_count_ = std::move(sel);
        sb.checkpoints_seen_ = seen;
        return sb;
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("Scoreboard::save: cannot open " + path);
        out << snapshot();
    }

    static Scoreboard load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("Scoreboard::load: cannot open " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return restore(ss.str());
    }

private:
    [[noreturn]] static void corrupt(const std::string& why) {
        throw std::runtime_error("corrupt snapshot: " + why);
    }

    std::vector<double> ema_;
    std::vector<double> var_;
    std::vector<double> last_raw_;
    std::vector<std::int64_t> sel_count_;
    std::int64_t checkpoints_seen_ = 0;
    double alpha_ = 0.8;
};

inline Scoreboard init_scores(std::vector<double> raw, double alpha) {
    return Scoreboard(std::move(raw), alpha);
}

}  // namespace dynaprune
