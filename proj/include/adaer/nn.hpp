#pragma once

// Two-layer MLP classifier (linear -> ReLU -> linear) with softmax
// cross-entropy, exact backpropagation and plain SGD. All functions are pure:
// inputs are never mutated, so a parameter set and its one-step successor can
// coexist.

#include <adaer/errors.hpp>
#include <adaer/example.hpp>
#include <adaer/rng.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace adaer {

/// Dense row-major matrix of doubles.
struct Tensor2D {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Tensor2D() = default;
    Tensor2D(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    bool operator==(const Tensor2D&) const = default;
};

struct Architecture {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    std::size_t output_dim = 0;

    bool operator==(const Architecture&) const = default;
};

/// Weight is fan_in x fan_out; bias has fan_out entries.
struct DenseLayer {
    Tensor2D weight;
    std::vector<double> bias;

    bool operator==(const DenseLayer&) const = default;
};

/// Trainable parameters of the classifier. Copying is the snapshot operation;
/// assignment restores.
struct ParamSet {
    Architecture arch;
    std::vector<DenseLayer> layers;

    bool operator==(const ParamSet&) const = default;
};

/// Partial derivatives of the mean batch loss, shaped like a ParamSet.
struct GradSet {
    Architecture arch;
    std::vector<DenseLayer> layers;

    bool operator==(const GradSet&) const = default;
};

struct LossReport {
    double mean_loss = 0.0;
    std::vector<double> per_example_loss;
    std::vector<Label> predictions;
};

namespace detail {

inline DenseLayer zero_layer(std::size_t fan_in, std::size_t fan_out) {
    return DenseLayer{Tensor2D(fan_in, fan_out), std::vector<double>(fan_out, 0.0)};
}

inline std::vector<DenseLayer> zero_layers(const Architecture& arch) {
    std::vector<DenseLayer> layers;
    layers.push_back(zero_layer(arch.input_dim, arch.hidden_dim));
    layers.push_back(zero_layer(arch.hidden_dim, arch.output_dim));
    return layers;
}

inline void check_shape(const ParamSet& params) {
    const auto& a = params.arch;
    if (params.layers.size() != 2 || params.layers[0].weight.rows != a.input_dim ||
        params.layers[0].weight.cols != a.hidden_dim || params.layers[0].bias.size() != a.hidden_dim ||
        params.layers[1].weight.rows != a.hidden_dim || params.layers[1].weight.cols != a.output_dim ||
        params.layers[1].bias.size() != a.output_dim) {
        throw InvalidArgument("parameter set does not match its architecture");
    }
}

inline void check_batch(const ParamSet& params, std::span<const Example> batch) {
    if (batch.empty()) throw InvalidArgument("batch is empty");
    for (std::size_t n = 0; n < batch.size(); ++n) {
        const auto& ex = batch[n];
        if (ex.features.size() != params.arch.input_dim) {
            throw InvalidArgument("example " + std::to_string(n) + " has " + std::to_string(ex.features.size()) +
                                  " features, network expects " + std::to_string(params.arch.input_dim));
        }
        if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= params.arch.output_dim) {
            throw InvalidArgument("label " + std::to_string(ex.label) + " out of range [0, " +
                                  std::to_string(params.arch.output_dim) + ")");
        }
        for (double v : ex.features) {
            if (!std::isfinite(v)) throw InvalidArgument("example " + std::to_string(n) + " has a non-finite feature");
        }
    }
}

// Activations of one example: hidden pre-activations, post-ReLU hidden, logits.
struct Activations {
    std::vector<double> pre;
    std::vector<double> hidden;
    std::vector<double> logits;
};

inline void forward_one(const ParamSet& params, std::span<const double> x, Activations& act) {
    const auto& l1 = params.layers[0];
    const auto& l2 = params.layers[1];
    const std::size_t H = params.arch.hidden_dim;
    const std::size_t K = params.arch.output_dim;

    act.pre.assign(l1.bias.begin(), l1.bias.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        const double* row = &l1.weight.data[i * H];
        for (std::size_t j = 0; j < H; ++j) act.pre[j] += xi * row[j];
    }
    act.hidden.resize(H);
    for (std::size_t j = 0; j < H; ++j) act.hidden[j] = act.pre[j] > 0.0 ? act.pre[j] : 0.0;

    act.logits.assign(l2.bias.begin(), l2.bias.end());
    for (std::size_t j = 0; j < H; ++j) {
        const double hj = act.hidden[j];
        if (hj == 0.0) continue;
        const double* row = &l2.weight.data[j * K];
        for (std::size_t k = 0; k < K; ++k) act.logits[k] += hj * row[k];
    }
}

// Softmax probabilities in place; returns log-sum-exp of the logits.
inline double softmax_inplace(std::vector<double>& z) {
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        sum += v;
    }
    for (double& v : z) v /= sum;
    return zmax + std::log(sum);
}

inline Label argmax(std::span<const double> z) {
    return static_cast<Label>(std::max_element(z.begin(), z.end()) - z.begin());
}

} // namespace detail

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
inline ParamSet init_network(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                             std::uint64_t seed) {
    if (input_dim == 0 || hidden_dim == 0 || output_dim == 0) {
        throw InvalidArgument("network dimensions must all be >= 1");
    }
    ParamSet params;
    params.arch = {input_dim, hidden_dim, output_dim};
    params.layers = detail::zero_layers(params.arch);
    Rng rng(seed);
    for (auto& layer : params.layers) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.rows));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& w : layer.weight.data) w = dist(rng);
    }
    return params;
}

/// All-zero parameters for the given architecture.
inline ParamSet zero_network(const Architecture& arch) {
    return ParamSet{arch, detail::zero_layers(arch)};
}

inline GradSet zero_grads(const Architecture& arch) {
    return GradSet{arch, detail::zero_layers(arch)};
}

/// Per-example softmax cross-entropy (nats) and argmax predictions.
inline LossReport forward_loss(const ParamSet& params, std::span<const Example> batch) {
    detail::check_shape(params);
    detail::check_batch(params, batch);

    LossReport report;
    report.per_example_loss.reserve(batch.size());
    report.predictions.reserve(batch.size());
    detail::Activations act;
    double total = 0.0;
    for (const auto& ex : batch) {
        detail::forward_one(params, ex.features, act);
        report.predictions.push_back(detail::argmax(act.logits));
        const double logit_y = act.logits[static_cast<std::size_t>(ex.label)];
        const double lse = detail::softmax_inplace(act.logits);
        const double loss = std::max(0.0, lse - logit_y);
        report.per_example_loss.push_back(loss);
        total += loss;
    }
    report.mean_loss = total / static_cast<double>(batch.size());
    return report;
}

/// Gradient of the mean softmax cross-entropy over the batch.
inline GradSet backward(const ParamSet& params, std::span<const Example> batch) {
    detail::check_shape(params);
    detail::check_batch(params, batch);

    const std::size_t H = params.arch.hidden_dim;
    const std::size_t K = params.arch.output_dim;
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    const auto& w2 = params.layers[1].weight;

    GradSet grads = zero_grads(params.arch);
    auto& g1 = grads.layers[0];
    auto& g2 = grads.layers[1];

    detail::Activations act;
    std::vector<double> dhidden(H);
    for (const auto& ex : batch) {
        detail::forward_one(params, ex.features, act);
        detail::softmax_inplace(act.logits);
        auto& dlogits = act.logits;
        dlogits[static_cast<std::size_t>(ex.label)] -= 1.0;
        for (double& d : dlogits) d *= inv_n;

        for (std::size_t k = 0; k < K; ++k) g2.bias[k] += dlogits[k];
        for (std::size_t j = 0; j < H; ++j) {
            const double hj = act.hidden[j];
            double back = 0.0;
            const double* wrow = &w2.data[j * K];
            double* grow = &g2.weight.data[j * K];
            for (std::size_t k = 0; k < K; ++k) {
                grow[k] += hj * dlogits[k];
                back += wrow[k] * dlogits[k];
            }
            dhidden[j] = act.pre[j] > 0.0 ? back : 0.0;
        }

        for (std::size_t j = 0; j < H; ++j) g1.bias[j] += dhidden[j];
        for (std::size_t i = 0; i < ex.features.size(); ++i) {
            const double xi = ex.features[i];
            if (xi == 0.0) continue;
            double* grow = &g1.weight.data[i * H];
            for (std::size_t j = 0; j < H; ++j) grow[j] += xi * dhidden[j];
        }
    }
    return grads;
}

/// theta - alpha * grads, leaving both inputs untouched.
inline ParamSet sgd_step(const ParamSet& params, const GradSet& grads, double alpha) {
    detail::check_shape(params);
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidArgument("learning rate must be finite and >= 0");
    if (!(grads.arch == params.arch) || grads.layers.size() != params.layers.size()) {
        throw InvalidArgument("gradient shape does not match parameters");
    }
    ParamSet next = params;
    for (std::size_t l = 0; l < next.layers.size(); ++l) {
        auto& layer = next.layers[l];
        const auto& g = grads.layers[l];
        if (g.weight.data.size() != layer.weight.data.size() || g.bias.size() != layer.bias.size()) {
            throw InvalidArgument("gradient shape does not match parameters");
        }
        for (std::size_t n = 0; n < layer.weight.data.size(); ++n) layer.weight.data[n] -= alpha * g.weight.data[n];
        for (std::size_t n = 0; n < layer.bias.size(); ++n) layer.bias[n] -= alpha * g.bias[n];
    }
    return next;
}

inline bool all_finite(const ParamSet& params) {
    for (const auto& layer : params.layers) {
        for (double w : layer.weight.data)
            if (!std::isfinite(w)) return false;
        for (double b : layer.bias)
            if (!std::isfinite(b)) return false;
    }
    return true;
}

inline std::vector<Label> predict(const ParamSet& params, std::span<const Example> batch) {
    detail::check_shape(params);
    std::vector<Label> out;
    out.reserve(batch.size());
    detail::Activations act;
    for (const auto& ex : batch) {
        detail::forward_one(params, ex.features, act);
        out.push_back(detail::argmax(act.logits));
    }
    return out;
}

/// Fraction of correctly classified examples over all output classes; 0 for an empty set.
inline double accuracy(const ParamSet& params, std::span<const Example> examples) {
    if (examples.empty()) return 0.0;
    const auto preds = predict(params, examples);
    std::size_t hits = 0;
    for (std::size_t n = 0; n < examples.size(); ++n) hits += preds[n] == examples[n].label ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(examples.size());
}

} // namespace adaer
