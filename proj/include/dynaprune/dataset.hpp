#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynaprune/rng.hpp"

namespace dynaprune {

/// Labeled dataset: row-major feature matrix, class labels, and stable
/// sample ids. Subset operations keep the original ids so a sample can be
/// traced back through imbalance/downsampling.
struct Dataset {
    std::int64_t n = 0;
    std::int64_t dim = 0;
    std::int64_t classes = 0;
    std::vector<double> features;           // n x dim
    std::vector<std::int64_t> labels;       // values in [0, classes)
    std::vector<std::int64_t> ids;          // unique, preserved by subsetting
    std::vector<std::int64_t> class_counts; // length classes

    std::span<const double> row(std::int64_t i) const {
        return {features.data() + i * dim, static_cast<std::size_t>(dim)};
    }
};

namespace detail {

inline std::vector<std::int64_t> count_classes(const std::vector<std::int64_t>& labels,
                                               std::int64_t classes) {
    std::vector<std::int64_t> counts(static_cast<std::size_t>(classes), 0);
    for (std::int64_t y : labels) {
        if (y < 0 || y >= classes) throw std::invalid_argument("label out of range");
        ++counts[static_cast<std::size_t>(y)];
    }
    return counts;
}

}  // namespace detail

inline Dataset make_dataset(std::vector<double> features, std::vector<std::int64_t> labels,
                            std::int64_t dim, std::int64_t classes,
                            std::vector<std::int64_t> ids = {}) {
    if (dim < 1 || classes < 1) throw std::invalid_argument("make_dataset: bad dimensions");
    const auto n = static_cast<std::int64_t>(labels.size());
    if (static_cast<std::int64_t>(features.size()) != n * dim) {
        throw std::invalid_argument("make_dataset: feature/label size mismatch");
    }
    Dataset ds;
    ds.n = n;
    ds.dim = dim;
    ds.classes = classes;
    ds.features = std::move(features);
    ds.labels = std::move(labels);
    if (ids.empty()) {
        ds.ids.resize(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) ds.ids[static_cast<std::size_t>(i)] = i;
    } else {
        if (static_cast<std::int64_t>(ids.size()) != n) {
            throw std::invalid_argument("make_dataset: id count mismatch");
        }
        ds.ids = std::move(ids);
    }
    ds.class_counts = detail::count_classes(ds.labels, classes);
    return ds;
}

/// Keep the listed row positions (in their current order), preserving ids.
inline Dataset subset_rows(const Dataset& ds, const std::vector<std::int64_t>& rows) {
    Dataset out;
    out.n = static_cast<std::int64_t>(rows.size());
    out.dim = ds.dim;
    out.classes = ds.classes;
    out.features.reserve(static_cast<std::size_t>(out.n * ds.dim));
    out.labels.reserve(rows.size());
    out.ids.reserve(rows.size());
    for (std::int64_t r : rows) {
        if (r < 0 || r >= ds.n) throw std::invalid_argument("subset_rows: row out of range");
        auto src = ds.row(r);
        out.features.insert(out.features.end(), src.begin(), src.end());
        out.labels.push_back(ds.labels[static_cast<std::size_t>(r)]);
        out.ids.push_back(ds.ids[static_cast<std::size_t>(r)]);
    }
    out.class_counts = detail::count_classes(out.labels, out.classes);
    return out;
}

// Cluster means are placed on scaled unit axes: class c sits at
// (1 + c/d) * e_{c mod d}, which keeps all pairs at least unit-separated
// and pairwise distinct for any C.
inline Dataset gen_blobs(std::int64_t n_per_class, std::int64_t classes, std::int64_t dim,
                         double spread, std::uint64_t seed) {
    if (n_per_class < 1) throw std::invalid_argument("gen_blobs: n_per_class must be >= 1");
    if (classes < 2) throw std::invalid_argument("gen_blobs: classes must be >= 2");
    if (dim < 1) throw std::invalid_argument("gen_blobs: dim must be >= 1");
    if (!(spread > 0.0)) throw std::invalid_argument("gen_blobs: spread must be positive");

    Rng rng(derive_seed(seed, "blobs"));
    const std::int64_t n = n_per_class * classes;
    std::vector<double> features(static_cast<std::size_t>(n * dim), 0.0);
    std::vector<std::int64_t> labels(static_cast<std::size_t>(n), 0);

    std::int64_t row = 0;
    for (std::int64_t c = 0; c < classes; ++c) {
        const std::int64_t axis = c % dim;
        const double magnitude = 1.0 + static_cast<double>(c / dim);
        for (std::int64_t s = 0; s < n_per_class; ++s, ++row) {
            double* x = features.data() + row * dim;
            for (std::int64_t j = 0; j < dim; ++j) x[j] = spread * rng.normal();
            x[axis] += magnitude;
            labels[static_cast<std::size_t>(row)] = c;
        }
    }
    return make_dataset(std::move(features), std::move(labels), dim, classes);
}

/// Blob mixture with engineered subpopulations: per class, a fraction of
/// tight "easy" points near the class mean and a fraction of "hard" points
/// placed at the midpoint toward the next class (heavily overlapping).
inline Dataset gen_blobs_mixed(std::int64_t n_per_class, std::int64_t classes, std::int64_t dim,
                               double spread, double spread_easy, double frac_easy,
                               double frac_hard, std::uint64_t seed) {
    if (n_per_class < 1) throw std::invalid_argument("gen_blobs_mixed: n_per_class must be >= 1");
    if (classes < 2) throw std::invalid_argument("gen_blobs_mixed: classes must be >= 2");
    if (dim < 1) throw std::invalid_argument("gen_blobs_mixed: dim must be >= 1");
    if (!(spread > 0.0) || !(spread_easy > 0.0)) {
        throw std::invalid_argument("gen_blobs_mixed: spreads must be positive");
    }
    if (frac_easy < 0.0 || frac_hard < 0.0 || frac_easy + frac_hard > 1.0) {
        throw std::invalid_argument("gen_blobs_mixed: fractions must be in [0,1] and sum <= 1");
    }

    Rng rng(derive_seed(seed, "blobs-mixed"));
    const std::int64_t n = n_per_class * classes;
    const auto n_easy = static_cast<std::int64_t>(std::floor(frac_easy * n_per_class + 0.5));
    const auto n_hard = static_cast<std::int64_t>(std::floor(frac_hard * n_per_class + 0.5));

    std::vector<double> features(static_cast<std::size_t>(n * dim), 0.0);
    std::vector<std::int64_t> labels(static_cast<std::size_t>(n), 0);
    std::vector<double> mean(static_cast<std::size_t>(dim));
    std::vector<double> other(static_cast<std::size_t>(dim));

    std::int64_t row = 0;
    for (std::int64_t c = 0; c < classes; ++c) {
        std::fill(mean.begin(), mean.end(), 0.0);
        mean[static_cast<std::size_t>(c % dim)] = 1.0 + static_cast<double>(c / dim);
        const std::int64_t next = (c + 1) % classes;
        std::fill(other.begin(), other.end(), 0.0);
        other[static_cast<std::size_t>(next % dim)] = 1.0 + static_cast<double>(next / dim);

        for (std::int64_t s = 0; s < n_per_class; ++s, ++row) {
            double* x = features.data() + row * dim;
            double sigma = spread;
            double w = 0.0;  // blend toward the neighboring class mean
            if (s < n_easy) {
                sigma = spread_easy;
            } else if (s < n_easy + n_hard) {
                sigma = spread;
                w = 0.5;
            }
            for (std::int64_t j = 0; j < dim; ++j) {
                double center = (1.0 - w) * mean[static_cast<std::size_t>(j)] +
                                w * other[static_cast<std::size_t>(j)];
                x[j] = center + sigma * rng.normal();
            }
            labels[static_cast<std::size_t>(row)] = c;
        }
    }
    return make_dataset(std::move(features), std::move(labels), dim, classes);
}

/// Per-class subsampling; each class c keeps round(rates[c] * count) samples
/// chosen uniformly without replacement. Round-half-up, ids preserved.
inline Dataset apply_imbalance(const Dataset& ds, const std::vector<double>& rates,
                               std::uint64_t seed) {
    if (static_cast<std::int64_t>(rates.size()) != ds.classes) {
        throw std::invalid_argument("apply_imbalance: need one rate per class");
    }
    for (double r : rates) {
        if (!(r > 0.0) || r > 1.0) {
            throw std::invalid_argument("apply_imbalance: rates must be in (0, 1]");
        }
    }

    Rng rng(derive_seed(seed, "imbalance"));
    std::vector<std::vector<std::int64_t>> by_class(static_cast<std::size_t>(ds.classes));
    for (std::int64_t i = 0; i < ds.n; ++i) {
        by_class[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])].push_back(i);
    }

    std::vector<std::int64_t> keep;
    for (std::int64_t c = 0; c < ds.classes; ++c) {
        auto& rows = by_class[static_cast<std::size_t>(c)];
        const auto count = static_cast<std::int64_t>(rows.size());
        const auto want = static_cast<std::int64_t>(
            std::floor(rates[static_cast<std::size_t>(c)] * static_cast<double>(count) + 0.5));
        auto picks = rng.sample_without_replacement(count, want);
        for (std::int64_t p : picks) keep.push_back(rows[static_cast<std::size_t>(p)]);
    }
    std::sort(keep.begin(), keep.end());  // stable row order
    return subset_rows(ds, keep);
}

/// Every class keeps exactly per_class samples, uniform without replacement.
inline Dataset downsample(const Dataset& ds, std::int64_t per_class, std::uint64_t seed) {
    if (per_class < 1) throw std::invalid_argument("downsample: per_class must be >= 1");
    for (std::int64_t c = 0; c < ds.classes; ++c) {
        if (per_class > ds.class_counts[static_cast<std::size_t>(c)]) {
            throw std::invalid_argument("downsample: per_class exceeds count of class " +
                                        std::to_string(c));
        }
    }

    Rng rng(derive_seed(seed, "downsample"));
    std::vector<std::vector<std::int64_t>> by_class(static_cast<std::size_t>(ds.classes));
    for (std::int64_t i = 0; i < ds.n; ++i) {
        by_class[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])].push_back(i);
    }

    std::vector<std::int64_t> keep;
    keep.reserve(static_cast<std::size_t>(per_class * ds.classes));
    for (std::int64_t c = 0; c < ds.classes; ++c) {
        auto& rows = by_class[static_cast<std::size_t>(c)];
        auto picks = rng.sample_without_replacement(static_cast<std::int64_t>(rows.size()),
                                                    per_class);
        for (std::int64_t p : picks) keep.push_back(rows[static_cast<std::size_t>(p)]);
    }
    std::sort(keep.begin(), keep.end());
    return subset_rows(ds, keep);
}

// CSV rows: d real feature fields then one integer label, no header.
// Ids are assigned by row order. classes may be given to validate labels;
// when negative it is inferred as max label + 1.
inline Dataset load_csv(const std::string& path, std::int64_t expected_dim = -1,
                        std::int64_t expected_classes = -1) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open " + path);

    std::vector<double> features;
    std::vector<std::int64_t> labels;
    std::int64_t dim = expected_dim;
    std::string line;
    std::int64_t line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        std::stringstream ss(line);
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() < 2) {
            throw std::runtime_error("load_csv: row " + std::to_string(line_no) +
                                     ": expected features and a label");
        }
        const auto row_dim = static_cast<std::int64_t>(fields.size()) - 1;
        if (dim < 0) dim = row_dim;
        if (row_dim != dim) {
            throw std::runtime_error("load_csv: row " + std::to_string(line_no) +
                                     ": expected " + std::to_string(dim) + " feature columns, got " +
                                     std::to_string(row_dim));
        }
        for (std::int64_t j = 0; j < dim; ++j) {
            const std::string& f = fields[static_cast<std::size_t>(j)];
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || ptr != f.data() + f.size()) {
                throw std::runtime_error("load_csv: row " + std::to_string(line_no) +
                                         ": bad feature value '" + f + "'");
            }
            features.push_back(v);
        }
        const std::string& lf = fields.back();
        std::int64_t y = 0;
        auto [ptr, ec] = std::from_chars(lf.data(), lf.data() + lf.size(), y);
        if (ec != std::errc() || ptr != lf.data() + lf.size()) {
            throw std::runtime_error("load_csv: row " + std::to_string(line_no) +
                                     ": bad label '" + lf + "'");
        }
        if (y < 0 || (expected_classes > 0 && y >= expected_classes)) {
            throw std::runtime_error("load_csv: row " + std::to_string(line_no) +
                                     ": label " + std::to_string(y) + " out of range");
        }
        labels.push_back(y);
    }
    if (labels.empty()) throw std::runtime_error("load_csv: empty dataset");

    std::int64_t classes = expected_classes;
    if (classes < 0) {
        classes = 0;
        for (std::int64_t y : labels) classes = std::max(classes, y + 1);
    }
    return make_dataset(std::move(features), std::move(labels), dim, classes);
}

inline void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_csv: cannot open " + path);
    char buf[64];
    for (std::int64_t i = 0; i < ds.n; ++i) {
        auto x = ds.row(i);
        for (std::int64_t j = 0; j < ds.dim; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", x[static_cast<std::size_t>(j)]);
            out << buf << ',';
        }
        out << ds.labels[static_cast<std::size_t>(i)] << '\n';
    }
}

}  // namespace dynaprune
