#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "finforecast/errors.hpp"
#include "finforecast/neural_core.hpp"
#include "finforecast/pipeline.hpp"

namespace finforecast {

struct TrainConfig {
    std::size_t epochs = 10;
    double learning_rate = 0.001;
    std::size_t patience = 5;
    std::size_t batch_size = 32;
    std::uint64_t seed = 42;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    bool shuffle = false;      // chronological order by default
    double clip_norm = 5.0;    // global-norm gradient clip, 0 disables
    std::size_t hidden = 64;

    void validate() const {
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (learning_rate <= 0) throw ConfigError("learning_rate must be > 0");
        if (patience < 1) throw ConfigError("patience must be >= 1");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    }
};

/// First/second moment estimates per tensor, in for_each_tensor order.
struct AdamState {
    std::vector<Tensor> m, v;
    std::size_t t = 0;
};

inline AdamState make_adam_state(const ModelParams& params) {
    AdamState state;
    for_each_tensor(const_cast<ModelParams&>(params), [&](const Tensor& tensor) {
        state.m.emplace_back(tensor.rows, tensor.cols);
        state.v.emplace_back(tensor.rows, tensor.cols);
    });
    return state;
}

inline double mse(std::span<const double> preds, std::span<const double> targets) {
    if (preds.size() != targets.size()) throw LengthMismatch("mse: length mismatch");
    if (preds.empty()) throw EmptyInput("mse: empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double d = preds[i] - targets[i];
        sum += d * d;
    }
    return sum / static_cast<double>(preds.size());
}

inline void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
                      const TrainConfig& config) {
    ++state.t;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
    std::size_t idx = 0;
    std::vector<const Tensor*> gs;
    for_each_tensor(const_cast<ModelParams&>(grads), [&](const Tensor& g) { gs.push_back(&g); });
    for_each_tensor(params, [&](Tensor& p) {
        const Tensor& g = *gs[idx];
        Tensor& m = state.m[idx];
        Tensor& v = state.v[idx];
        ++idx;
        if (g.size() != p.size()) throw ShapeMismatch("adam_step: gradient shape mismatch");
        for (std::size_t j = 0; j < p.size(); ++j) {
            m.v[j] = config.beta1 * m.v[j] + (1.0 - config.beta1) * g.v[j];
            v.v[j] = config.beta2 * v.v[j] + (1.0 - config.beta2) * g.v[j] * g.v[j];
            const double m_hat = m.v[j] / bc1;
            const double v_hat = v.v[j] / bc2;
            p.v[j] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
        }
    });
}

struct TrainHistory {
    std::vector<double> train_loss, val_loss;
    std::size_t best_epoch = 0; // zero-based index into the loss vectors
    bool stopped_early = false;
};

struct TrainResult {
    ModelParams params; // weights from the best-validation epoch
    TrainHistory history;
};

inline void export_history_csv(const TrainHistory& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << "epoch,train_loss,val_loss\n";
    char buf[96];
    for (std::size_t e = 0; e < history.train_loss.size(); ++e) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", e + 1, history.train_loss[e],
                      history.val_loss[e]);
        out << buf;
    }
}

namespace detail {

inline void clip_gradients(ModelParams& grads, double clip_norm) {
    if (clip_norm <= 0) return;
    double sq = 0.0;
    for_each_tensor(grads, [&](const Tensor& t) {
        for (double x : t.v) sq += x * x;
    });
    const double norm = std::sqrt(sq);
    if (norm > clip_norm) {
        const double scale = clip_norm / norm;
        for_each_tensor(grads, [&](Tensor& t) {
            for (double& x : t.v) x *= scale;
        });
    }
}

inline double validation_mse(const ModelParams& params, const WindowedDataset& ds, IndexRange range) {
    double sum = 0.0;
    for (std::size_t i = range.begin; i < range.end; ++i) {
        const double d = predict(ds.X[i], params) - ds.y[i];
        sum += d * d;
    }
    return sum / static_cast<double>(range.count());
}

} // namespace detail

/// Mini-batch Adam training with early stopping on validation MSE.
/// Batches stay chronological unless config.shuffle is set; the batch
/// gradient is the mean over the batch, clipped by global norm.
inline TrainResult train(const ModelSpec& spec, const WindowedDataset& ds, const TrainConfig& config) {
    config.validate();
    if (ds.train.count() == 0 || ds.val.count() == 0)
        throw EmptyInput("train: dataset needs nonempty train and validation segments");
    if (spec.features != ds.F) throw ShapeMismatch("train: spec features differ from dataset");

    ModelParams params = init_params(spec, config.seed);
    AdamState adam = make_adam_state(params);
    std::mt19937_64 order_rng(config.seed ^ 0x9e3779b97f4a7c15ull);

    TrainResult result;
    result.params = params;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t epochs_since_best = 0;

    std::vector<std::size_t> order(ds.train.count());
    std::iota(order.begin(), order.end(), ds.train.begin);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.shuffle) std::shuffle(order.begin(), order.end(), order_rng);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t count = std::min(config.batch_size, order.size() - start);
            ModelParams batch_grads = zeros_like(params);
            for (std::size_t k = 0; k < count; ++k) {
                const std::size_t i = order[start + k];
                SequenceCache cache = sequence_forward(ds.X[i], params);
                BackwardResult back = backward(ds.y[i], params, cache);
                epoch_loss += back.loss;
                std::size_t idx = 0;
                std::vector<const Tensor*> gs;
                for_each_tensor(back.grads, [&](const Tensor& g) { gs.push_back(&g); });
                for_each_tensor(batch_grads, [&](Tensor& acc) {
                    const Tensor& g = *gs[idx++];
                    for (std::size_t j = 0; j < acc.size(); ++j) acc.v[j] += g.v[j];
                });
            }
            const double inv = 1.0 / static_cast<double>(count);
            for_each_tensor(batch_grads, [&](Tensor& t) {
                for (double& x : t.v) x *= inv;
            });
            detail::clip_gradients(batch_grads, config.clip_norm);
            adam_step(params, batch_grads, adam, config);
        }
        epoch_loss /= static_cast<double>(order.size());
        if (!std::isfinite(epoch_loss))
            throw DivergenceDetected("train: non-finite loss at epoch " + std::to_string(epoch + 1));

        const double val = detail::validation_mse(params, ds, ds.val);
        result.history.train_loss.push_back(epoch_loss);
        result.history.val_loss.push_back(val);

        if (val < best_val) {
            best_val = val;
            result.history.best_epoch = epoch;
            result.params = params;
            epochs_since_best = 0;
        } else {
            ++epochs_since_best;
            if (epochs_since_best >= config.patience) {
                result.history.stopped_early = true;
                break;
            }
        }
    }
    return result;
}

} // namespace finforecast
