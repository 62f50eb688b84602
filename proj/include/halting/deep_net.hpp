#pragma once

#include <cmath>
#include <deque>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "halting/mnist_io.hpp"
#include "halting/rng.hpp"

namespace halting::deep_net {

// Fully connected net: rectified linear hidden layers, softmax +
// cross-entropy at the output.
struct MlpArchitecture {
    std::vector<int> layer_sizes = {784, 500, 300, 10};

    void validate() const {
        if (layer_sizes.size() < 2)
            throw std::invalid_argument("MlpArchitecture: need at least 2 layers");
        for (int s : layer_sizes)
            if (s < 1) throw std::invalid_argument("MlpArchitecture: layer sizes must be positive");
    }
    int num_classes() const { return layer_sizes.back(); }
};

struct MlpParams {
    std::vector<Eigen::MatrixXd> weights;  // weights[l]: sizes[l+1] x sizes[l]
    std::vector<Eigen::VectorXd> biases;
};

// Gaussian weights scaled by 1/sqrt(fan-in), zero biases.
inline MlpParams init_params(const MlpArchitecture& arch, RandomStream& rng) {
    arch.validate();
    MlpParams p;
    const auto& sz = arch.layer_sizes;
    for (std::size_t l = 0; l + 1 < sz.size(); ++l) {
        const int fan_in = sz[l], fan_out = sz[l + 1];
        Eigen::MatrixXd w(fan_out, fan_in);
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (int i = 0; i < fan_out; ++i)
            for (int j = 0; j < fan_in; ++j) w(i, j) = scale * rng.normal();
        p.weights.push_back(std::move(w));
        p.biases.push_back(Eigen::VectorXd::Zero(fan_out));
    }
    return p;
}

struct Batch {
    Eigen::MatrixXd inputs;  // dim x B
    std::vector<int> labels;
};

namespace detail {

struct ForwardPass {
    std::vector<Eigen::MatrixXd> activations;  // activations[0] = inputs
    Eigen::MatrixXd probs;                     // softmax outputs, classes x B
    double cost = 0.0;
};

inline ForwardPass forward(const MlpParams& p, const Batch& batch) {
    const std::size_t layers = p.weights.size();
    if (batch.inputs.cols() == 0)
        throw std::invalid_argument("forward: empty batch");
    if (batch.inputs.rows() != p.weights[0].cols())
        throw std::invalid_argument("forward: input dimension mismatch");
    if (static_cast<std::size_t>(batch.inputs.cols()) != batch.labels.size())
        throw std::invalid_argument("forward: label count mismatch");

    ForwardPass fp;
    fp.activations.reserve(layers + 1);
    fp.activations.push_back(batch.inputs);
    for (std::size_t l = 0; l < layers; ++l) {
        Eigen::MatrixXd z =
            (p.weights[l] * fp.activations.back()).colwise() + p.biases[l];
        if (l + 1 < layers) z = z.cwiseMax(0.0);  // relu on hidden layers
        fp.activations.push_back(std::move(z));
    }

    // Stable softmax + cross-entropy.
    const Eigen::MatrixXd& logits = fp.activations.back();
    const Eigen::Index bsz = logits.cols();
    fp.probs.resize(logits.rows(), bsz);
    double cost = 0.0;
    for (Eigen::Index c = 0; c < bsz; ++c) {
        const double mx = logits.col(c).maxCoeff();
        Eigen::VectorXd e = (logits.col(c).array() - mx).exp();
        const double sum = e.sum();
        fp.probs.col(c) = e / sum;
        const int label = batch.labels[static_cast<std::size_t>(c)];
        if (label < 0 || label >= logits.rows())
            throw std::invalid_argument("forward: label out of range");
        cost -= logits(label, c) - mx - std::log(sum);
    }
    fp.cost = cost / static_cast<double>(bsz);
    return fp;
}

}  // namespace detail

// Mean cross-entropy over the batch.
inline double forward_cost(const MlpParams& p, const Batch& batch) {
    return detail::forward(p, batch).cost;
}

struct MlpGradient {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    double squared_norm() const {
        double acc = 0.0;
        for (const auto& w : weights) acc += w.squaredNorm();
        for (const auto& b : biases) acc += b.squaredNorm();
        return acc;
    }
};

// Exact gradient of forward_cost by backpropagation. The rectified-linear
// subgradient at 0 is taken as 0.
inline MlpGradient backward(const MlpParams& p, const Batch& batch) {
    const auto fp = detail::forward(p, batch);
    const std::size_t layers = p.weights.size();
    const double bsz = static_cast<double>(batch.inputs.cols());

    MlpGradient g;
    g.weights.resize(layers);
    g.biases.resize(layers);

    // delta at the output: (softmax - onehot) / B
    Eigen::MatrixXd delta = fp.probs;
    for (Eigen::Index c = 0; c < delta.cols(); ++c)
        delta(batch.labels[static_cast<std::size_t>(c)], c) -= 1.0;
    delta /= bsz;

    for (std::size_t l = layers; l-- > 0;) {
        g.weights[l] = delta * fp.activations[l].transpose();
        g.biases[l] = delta.rowwise().sum();
        if (l > 0) {
            delta = p.weights[l].transpose() * delta;
            // relu mask: pre-activation > 0 iff the stored activation > 0
            delta = (fp.activations[l].array() > 0.0).cast<double>() * delta.array();
        }
    }
    return g;
}

enum class StopKind { AvgCostDiff, GradNorm };

struct StoppingRule {
    StopKind kind = StopKind::AvgCostDiff;
    double threshold = 1e-3;
    int window = 25;          // AvgCostDiff only
    bool full_cost = false;   // evaluate the rule on full-dataset cost instead of minibatch cost

    void validate() const {
        if (!(threshold > 0.0)) throw std::invalid_argument("StoppingRule: threshold must be positive");
        if (kind == StopKind::AvgCostDiff && window < 2)
            throw std::invalid_argument("StoppingRule: window must be >= 2");
    }
};

enum class TrainFlag { None, NonFinite };

struct TrainResult {
    int halting_time = 0;  // SGD iterations at the stop
    double final_train_cost = 0.0;
    double train_accuracy = 0.0;
    bool converged = false;
    TrainFlag flag = TrainFlag::None;
    std::vector<double> cost_history;  // kept only on request
    MlpParams params;
};

// Fraction of argmax-logit predictions matching the labels.
inline double accuracy(const MlpParams& p, const MnistDataset& ds) {
    if (ds.count() == 0) throw std::invalid_argument("accuracy: empty dataset");
    Batch batch{ds.images, ds.labels};
    const auto fp = detail::forward(p, batch);
    const Eigen::MatrixXd& logits = fp.activations.back();
    Eigen::Index hits = 0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        Eigen::Index best;
        logits.col(c).maxCoeff(&best);
        if (static_cast<int>(best) == ds.labels[static_cast<std::size_t>(c)]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(logits.cols());
}

struct SgdConfig {
    int batch_size = 100;
    double learning_rate = 0.1;
    StoppingRule stop;
    int cap = 20000;
    bool keep_cost_history = false;
};

// Minibatch SGD with a fresh shuffle each epoch. The stopping rule is
// evaluated after every iteration; halting_time is the iteration index at
// the first success.
inline TrainResult sgd_train_halting(const MlpArchitecture& arch, const MnistDataset& ds,
                                     const SgdConfig& cfg, RandomStream& rng) {
    arch.validate();
    cfg.stop.validate();
    if (cfg.batch_size < 1 || ds.count() < cfg.batch_size)
        throw std::invalid_argument("sgd_train_halting: dataset smaller than batch size");
    if (cfg.cap < 1) throw std::invalid_argument("sgd_train_halting: cap must be >= 1");

    MlpParams params = init_params(arch, rng);
    const Eigen::Index count = ds.count();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(count));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);

    auto shuffle = [&]() {
        for (Eigen::Index i = count - 1; i > 0; --i) {
            const auto j = static_cast<Eigen::Index>(
                rng.below(static_cast<std::uint64_t>(i + 1)));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }
    };

    TrainResult res;
    std::deque<double> recent_costs;
    Batch batch;
    batch.inputs.resize(ds.dim(), cfg.batch_size);
    batch.labels.resize(static_cast<std::size_t>(cfg.batch_size));

    const Eigen::Index batches_per_epoch = count / cfg.batch_size;
    Eigen::Index batch_in_epoch = batches_per_epoch;  // trigger initial shuffle
    int t = 0;
    bool stopped = false;
    double grad_norm = 0.0;

    while (t < cfg.cap && !stopped) {
        if (batch_in_epoch == batches_per_epoch) {
            shuffle();
            batch_in_epoch = 0;
        }
        const Eigen::Index offset = batch_in_epoch * cfg.batch_size;
        for (int i = 0; i < cfg.batch_size; ++i) {
            const Eigen::Index src = order[static_cast<std::size_t>(offset + i)];
            batch.inputs.col(i) = ds.images.col(src);
            batch.labels[static_cast<std::size_t>(i)] = ds.labels[static_cast<std::size_t>(src)];
        }
        ++batch_in_epoch;

        const auto fp = detail::forward(params, batch);
        if (!std::isfinite(fp.cost)) {
            res.flag = TrainFlag::NonFinite;
            break;
        }
        MlpGradient g = backward(params, batch);
        for (std::size_t l = 0; l < params.weights.size(); ++l) {
            params.weights[l] -= cfg.learning_rate * g.weights[l];
            params.biases[l] -= cfg.learning_rate * g.biases[l];
        }
        ++t;

        double rule_cost = fp.cost;
        if (cfg.stop.kind == StopKind::AvgCostDiff && cfg.stop.full_cost)
            rule_cost = forward_cost(params, {ds.images, ds.labels});
        if (cfg.keep_cost_history) res.cost_history.push_back(rule_cost);

        if (cfg.stop.kind == StopKind::AvgCostDiff) {
            recent_costs.push_back(rule_cost);
            if (static_cast<int>(recent_costs.size()) > cfg.stop.window)
                recent_costs.pop_front();
            if (static_cast<int>(recent_costs.size()) == cfg.stop.window) {
                double avg = 0.0;
                for (std::size_t i = 1; i < recent_costs.size(); ++i)
                    avg += std::abs(recent_costs[i] - recent_costs[i - 1]);
                avg /= static_cast<double>(cfg.stop.window - 1);
                if (avg < cfg.stop.threshold) stopped = true;
            }
        } else {
            grad_norm = std::sqrt(g.squared_norm());
            if (grad_norm < cfg.stop.threshold) stopped = true;
        }
    }

    res.halting_time = t;
    res.converged = stopped && res.flag == TrainFlag::None;
    res.final_train_cost = forward_cost(params, {ds.images, ds.labels});
    res.train_accuracy = accuracy(params, ds);
    res.params = std::move(params);
    return res;
}

}  // namespace halting::deep_net
