#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynaprune/dataset.hpp"
#include "dynaprune/rng.hpp"

namespace dynaprune {

enum class Arch { softmax_regression, mlp };

inline std::string arch_name(Arch a) {
    return a == Arch::softmax_regression ? "softmax" : "mlp";
}

struct SgdHyper {
    double lr0 = 0.1;
    double momentum = 0.9;
    bool nesterov = true;
    double weight_decay = 5e-4;
    std::int64_t batch_size = 128;
};

/// Step schedule: lr0 divided by factor once per milestone at or before the
/// given epoch.
struct LrSchedule {
    double lr0 = 0.1;
    std::vector<std::int64_t> milestones{60, 120, 160};
    double factor = 5.0;
};

inline double lr_at(const LrSchedule& schedule, std::int64_t epoch) {
    if (epoch < 0) throw std::invalid_argument("lr_at: epoch must be >= 0");
    int hits = 0;
    for (std::int64_t m : schedule.milestones) {
        if (m <= epoch) ++hits;
    }
    return schedule.lr0 / std::pow(schedule.factor, hits);
}

struct LearnerConfig {
    Arch arch = Arch::softmax_regression;
    std::int64_t hidden = 16;  // mlp only
    SgdHyper hyper;
    LrSchedule schedule;
};

/// Thrown when training produces a non-finite loss or gradient.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat-parameter classifier. Layouts:
///   softmax_regression: W[C x d], b[C]
///   mlp:                W1[h x d], b1[h], W2[C x h], b2[C]  (tanh hidden)
struct LearnerState {
    Arch arch = Arch::softmax_regression;
    std::int64_t dim = 0;
    std::int64_t classes = 0;
    std::int64_t hidden = 0;  // 0 for softmax_regression
    std::vector<double> params;
    std::vector<double> momentum_buf;
    SgdHyper hyper;
    std::int64_t epoch = 0;

    std::int64_t param_count() const { return static_cast<std::int64_t>(params.size()); }

    // Bias entries are exempt from weight decay.
    bool is_bias(std::int64_t idx) const {
        if (arch == Arch::softmax_regression) {
            return idx >= classes * dim;
        }
        const std::int64_t w1 = hidden * dim;
        const std::int64_t b1 = w1 + hidden;
        const std::int64_t w2 = b1 + classes * hidden;
        return (idx >= w1 && idx < b1) || idx >= w2;
    }
};

inline LearnerState init_learner(Arch arch, std::int64_t dim, std::int64_t classes,
                                 std::uint64_t seed, const SgdHyper& hyper = {},
                                 std::int64_t hidden = 16) {
    if (dim < 1 || classes < 1) throw std::invalid_argument("init_learner: bad dimensions");
    if (arch == Arch::mlp && hidden < 1) throw std::invalid_argument("init_learner: bad hidden size");
    if (hyper.batch_size < 1) throw std::invalid_argument("init_learner: batch_size must be >= 1");

    LearnerState st;
    st.arch = arch;
    st.dim = dim;
    st.classes = classes;
    st.hidden = (arch == Arch::mlp) ? hidden : 0;
    st.hyper = hyper;

    std::int64_t count;
    if (arch == Arch::softmax_regression) {
        count = classes * dim + classes;
    } else {
        count = hidden * dim + hidden + classes * hidden + classes;
    }
    st.params.assign(static_cast<std::size_t>(count), 0.0);
    st.momentum_buf.assign(static_cast<std::size_t>(count), 0.0);

    // Weights ~ N(0, 1/fan_in), biases zero.
    Rng rng(derive_seed(seed, "learner-init"));
    auto fill_weights = [&](std::int64_t offset, std::int64_t rows, std::int64_t cols) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
        for (std::int64_t i = 0; i < rows * cols; ++i) {
            st.params[static_cast<std::size_t>(offset + i)] = scale * rng.normal();
        }
    };
    if (arch == Arch::softmax_regression) {
        fill_weights(0, classes, dim);
    } else {
        fill_weights(0, hidden, dim);
        fill_weights(hidden * dim + hidden, classes, hidden);
    }
    return st;
}

inline LearnerState init_learner(const LearnerConfig& cfg, std::int64_t dim,
                                 std::int64_t classes, std::uint64_t seed) {
    return init_learner(cfg.arch, dim, classes, seed, cfg.hyper, cfg.hidden);
}

namespace detail {

inline void check_dims(const LearnerState& st, const Dataset& ds) {
    if (st.dim != ds.dim || st.classes < ds.classes) {
        throw std::invalid_argument("learner/dataset dimension mismatch");
    }
}

inline void forward_logits(const LearnerState& st, std::span<const double> x,
                           std::vector<double>& hidden_act, std::vector<double>& logits) {
    const std::int64_t d = st.dim;
    const std::int64_t C = st.classes;
    logits.assign(static_cast<std::size_t>(C), 0.0);
    if (st.arch == Arch::softmax_regression) {
        const double* W = st.params.data();
        const double* b = W + C * d;
        for (std::int64_t c = 0; c < C; ++c) {
            double acc = b[c];
            const double* w = W + c * d;
            for (std::int64_t j = 0; j < d; ++j) acc += w[j] * x[static_cast<std::size_t>(j)];
            logits[static_cast<std::size_t>(c)] = acc;
        }
    } else {
        const std::int64_t h = st.hidden;
        const double* W1 = st.params.data();
        const double* b1 = W1 + h * d;
        const double* W2 = b1 + h;
        const double* b2 = W2 + C * h;
        hidden_act.assign(static_cast<std::size_t>(h), 0.0);
        for (std::int64_t u = 0; u < h; ++u) {
            double acc = b1[u];
            const double* w = W1 + u * d;
            for (std::int64_t j = 0; j < d; ++j) acc += w[j] * x[static_cast<std::size_t>(j)];
            hidden_act[static_cast<std::size_t>(u)] = std::tanh(acc);
        }
        for (std::int64_t c = 0; c < C; ++c) {
            double acc = b2[c];
            const double* w = W2 + c * h;
            for (std::int64_t u = 0; u < h; ++u) acc += w[u] * hidden_act[static_cast<std::size_t>(u)];
            logits[static_cast<std::size_t>(c)] = acc;
        }
    }
}

// softmax probabilities in place of logits; returns log-sum-exp.
inline double softmax_inplace(std::vector<double>& logits) {
    double m = logits[0];
    for (double v : logits) m = std::max(m, v);
    double sum = 0.0;
    for (double& v : logits) {
        v = std::exp(v - m);
        sum += v;
    }
    for (double& v : logits) v /= sum;
    return m + std::log(sum);
}

}  // namespace detail

/// Cross-entropy of softmax(logits) against the true label, one entry per
/// sample. Log-sum-exp stabilized, so entries are finite and >= 0 for
/// finite parameters.
inline std::vector<double> per_sample_loss(const LearnerState& st, const Dataset& ds) {
    detail::check_dims(st, ds);
    std::vector<double> out(static_cast<std::size_t>(ds.n));
    std::vector<double> hidden, logits;
    for (std::int64_t i = 0; i < ds.n; ++i) {
        detail::forward_logits(st, ds.row(i), hidden, logits);
        const double true_logit = logits[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])];
        const double lse = detail::softmax_inplace(logits);
        out[static_cast<std::size_t>(i)] = lse - true_logit;
    }
    return out;
}

/// argmax(logits) == label, ties broken toward the lowest class id.
inline std::vector<bool> per_sample_correct(const LearnerState& st, const Dataset& ds) {
    detail::check_dims(st, ds);
    std::vector<bool> out(static_cast<std::size_t>(ds.n));
    std::vector<double> hidden, logits;
    for (std::int64_t i = 0; i < ds.n; ++i) {
        detail::forward_logits(st, ds.row(i), hidden, logits);
        std::int64_t best = 0;
        for (std::int64_t c = 1; c < st.classes; ++c) {
            if (logits[static_cast<std::size_t>(c)] > logits[static_cast<std::size_t>(best)]) best = c;
        }
        out[static_cast<std::size_t>(i)] = (best == ds.labels[static_cast<std::size_t>(i)]);
    }
    return out;
}

/// L2 norm of (softmax probabilities - one-hot label); values in [0, sqrt(2)].
inline std::vector<double> per_sample_error_norm(const LearnerState& st, const Dataset& ds) {
    detail::check_dims(st, ds);
    std::vector<double> out(static_cast<std::size_t>(ds.n));
    std::vector<double> hidden, logits;
    for (std::int64_t i = 0; i < ds.n; ++i) {
        detail::forward_logits(st, ds.row(i), hidden, logits);
        detail::softmax_inplace(logits);
        const std::int64_t y = ds.labels[static_cast<std::size_t>(i)];
        double acc = 0.0;
        for (std::int64_t c = 0; c < st.classes; ++c) {
            const double diff = logits[static_cast<std::size_t>(c)] - (c == y ? 1.0 : 0.0);
            acc += diff * diff;
        }
        out[static_cast<std::size_t>(i)] = std::sqrt(acc);
    }
    return out;
}

inline double accuracy(const LearnerState& st, const Dataset& ds) {
    auto correct = per_sample_correct(st, ds);
    std::int64_t hits = 0;
    for (bool c : correct) hits += c ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(ds.n);
}

/// Mean cross-entropy over the given rows and its gradient w.r.t. the flat
/// parameter vector (data term only; weight decay is applied in the update).
inline double batch_loss_grad(const LearnerState& st, const Dataset& ds,
                              std::span<const std::int64_t> rows, std::vector<double>& grad) {
    detail::check_dims(st, ds);
    if (rows.empty()) throw std::invalid_argument("batch_loss_grad: empty batch");
    grad.assign(st.params.size(), 0.0);

    const std::int64_t d = st.dim;
    const std::int64_t C = st.classes;
    const double inv_b = 1.0 / static_cast<double>(rows.size());
    std::vector<double> hidden, probs, dhidden;
    double loss = 0.0;

    for (std::int64_t r : rows) {
        auto x = ds.row(r);
        const std::int64_t y = ds.labels[static_cast<std::size_t>(r)];
        detail::forward_logits(st, x, hidden, probs);
        const double true_logit = probs[static_cast<std::size_t>(y)];
        const double lse = detail::softmax_inplace(probs);
        loss += (lse - true_logit) * inv_b;

        // dL/dlogit_c = (p_c - 1[c==y]) / B
        probs[static_cast<std::size_t>(y)] -= 1.0;
        for (double& p : probs) p *= inv_b;

        if (st.arch == Arch::softmax_regression) {
            double* gW = grad.data();
            double* gb = gW + C * d;
            for (std::int64_t c = 0; c < C; ++c) {
                const double dc = probs[static_cast<std::size_t>(c)];
                double* gw = gW + c * d;
                for (std::int64_t j = 0; j < d; ++j) gw[j] += dc * x[static_cast<std::size_t>(j)];
                gb[c] += dc;
            }
        } else {
            const std::int64_t h = st.hidden;
            const double* W2 = st.params.data() + h * d + h;
            double* gW1 = grad.data();
            double* gb1 = gW1 + h * d;
            double* gW2 = gb1 + h;
            double* gb2 = gW2 + C * h;

            dhidden.assign(static_cast<std::size_t>(h), 0.0);
            for (std::int64_t c = 0; c < C; ++c) {
                const double dc = probs[static_cast<std::size_t>(c)];
                const double* w = W2 + c * h;
                double* gw = gW2 + c * h;
                for (std::int64_t u = 0; u < h; ++u) {
                    gw[u] += dc * hidden[static_cast<std::size_t>(u)];
                    dhidden[static_cast<std::size_t>(u)] += dc * w[u];
                }
                gb2[c] += dc;
            }
            for (std::int64_t u = 0; u < h; ++u) {
                const double a = hidden[static_cast<std::size_t>(u)];
                const double dz = dhidden[static_cast<std::size_t>(u)] * (1.0 - a * a);
                double* gw = gW1 + u * d;
                for (std::int64_t j = 0; j < d; ++j) gw[j] += dz * x[static_cast<std::size_t>(j)];
                gb1[u] += dz;
            }
        }
    }
    return loss;
}

struct EpochResult {
    double mean_loss = 0.0;
    double accuracy = 0.0;
    std::int64_t batches = 0;
};

/// One pass over `subset` in seeded shuffled order: minibatches of
/// hyper.batch_size (last one may be smaller), Nesterov momentum update,
/// weight decay as an additive L2 term on non-bias parameters. Metrics are
/// measured on the forward pass of each batch before its update.
inline EpochResult sgd_epoch(LearnerState& st, const Dataset& ds,
                             std::span<const std::int64_t> subset, double lr,
                             std::uint64_t seed) {
    detail::check_dims(st, ds);
    if (subset.empty()) throw std::invalid_argument("sgd_epoch: empty subset");
    for (std::int64_t r : subset) {
        if (r < 0 || r >= ds.n) throw std::invalid_argument("sgd_epoch: subset row out of range");
    }

    std::vector<std::int64_t> order(subset.begin(), subset.end());
    Rng rng(derive_seed(seed, "epoch-shuffle"));
    rng.shuffle(order);

    EpochResult res;
    std::vector<double> grad;
    std::vector<double> hidden, logits;
    const std::int64_t bsz = st.hyper.batch_size;
    double loss_sum = 0.0;
    std::int64_t correct_sum = 0;

    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(bsz)) {
        const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(bsz));
        std::span<const std::int64_t> batch(order.data() + start, stop - start);

        const double batch_loss = batch_loss_grad(st, ds, batch, grad);
        if (!std::isfinite(batch_loss)) throw DivergenceError("sgd_epoch: non-finite loss");
        loss_sum += batch_loss * static_cast<double>(batch.size());

        for (std::int64_t r : batch) {
            detail::forward_logits(st, ds.row(r), hidden, logits);
            std::int64_t best = 0;
            for (std::int64_t c = 1; c < st.classes; ++c) {
                if (logits[static_cast<std::size_t>(c)] > logits[static_cast<std::size_t>(best)]) best = c;
            }
            correct_sum += (best == ds.labels[static_cast<std::size_t>(r)]) ? 1 : 0;
        }

        const double mu = st.hyper.momentum;
        const double wd = st.hyper.weight_decay;
        for (std::size_t j = 0; j < st.params.size(); ++j) {
            double g = grad[j];
            if (wd != 0.0 && !st.is_bias(static_cast<std::int64_t>(j))) g += wd * st.params[j];
            if (!std::isfinite(g)) throw DivergenceError("sgd_epoch: non-finite gradient");
            double step;
            if (mu != 0.0) {
                st.momentum_buf[j] = mu * st.momentum_buf[j] + g;
                step = st.hyper.nesterov ? g + mu * st.momentum_buf[j] : st.momentum_buf[j];
            } else {
                step = g;
            }
            st.params[j] -= lr * step;
        }
        ++res.batches;
    }

    st.epoch += 1;
    res.mean_loss = loss_sum / static_cast<double>(order.size());
    res.accuracy = static_cast<double>(correct_sum) / static_cast<double>(order.size());
    return res;
}

}  // namespace dynaprune
