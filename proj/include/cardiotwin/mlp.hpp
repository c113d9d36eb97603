#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cardiotwin {

enum class Activation { tanh_fn, relu };
enum class HeadKind { linear, range_sigmoid };
enum class Optimizer { sgd, adam };

/// lo + sigmoid(raw) * (hi - lo): squashes a raw output strictly inside
/// (lo, hi) for every finite raw value.
double range_sigmoid(double raw, double lo, double hi);

/// Fully connected network. Hidden layers share one activation; the output
/// layer is linear or bounded by a per-output range_sigmoid. Weights are
/// row-major (out x in).
struct Mlp {
    std::vector<std::size_t> dims;  // e.g. {7, 64, 64, 2}
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
    Activation hidden = Activation::tanh_fn;
    HeadKind head = HeadKind::linear;
    std::vector<double> head_lo, head_hi;  // per-output bounds when head == range_sigmoid

    std::size_t input_dim() const { return dims.front(); }
    std::size_t output_dim() const { return dims.back(); }
    std::size_t layer_count() const { return weights.size(); }
    std::size_t parameter_count() const;

    void validate() const;
};

/// Seeded init: weights and biases uniform in +-1/sqrt(fan_in), drawn layer
/// by layer (weights first, then biases) so the layout is reproducible.
Mlp make_mlp(std::vector<std::size_t> dims, Activation hidden, HeadKind head, std::uint64_t seed,
             std::vector<double> head_lo = {}, std::vector<double> head_hi = {});

std::vector<double> forward(const Mlp& net, std::span<const double> input);

/// Supervised batch storage, sample-major flat arrays.
struct TrainData {
    std::size_t input_dim = 0;
    std::size_t target_dim = 0;
    std::vector<double> inputs;
    std::vector<double> targets;

    std::size_t size() const { return input_dim == 0 ? 0 : inputs.size() / input_dim; }
    void add(std::span<const double> x, std::span<const double> y);
    std::span<const double> input(std::size_t i) const { return {inputs.data() + i * input_dim, input_dim}; }
    std::span<const double> target(std::size_t i) const { return {targets.data() + i * target_dim, target_dim}; }
};

struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    static Gradients zeros_like(const Mlp& net);
    void scale(double s);
};

/// Mean-squared-error loss over the batch (mean over samples and output
/// components) with exact reverse-mode gradients for `net`. When
/// `frozen_tail` is given the loss is evaluated on frozen_tail(net(x));
/// gradients flow through the tail's weights without touching them.
struct LossGrad {
    double loss = 0.0;
    Gradients grad;
};
LossGrad loss_and_grad(const Mlp& net, const TrainData& batch, const Mlp* frozen_tail = nullptr);

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t batch_size = 100;
    std::size_t epochs = 300;
    std::uint64_t seed = 0;  // epoch shuffling
    Optimizer optimizer = Optimizer::adam;
    // adam moments
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
};

struct TrainResult {
    Mlp net;
    std::vector<double> loss_history;  // per-epoch mean training loss
};

/// Minibatch training. Shuffles per epoch from config.seed, visits every
/// sample (trailing short batch included), and is fully deterministic.
/// Throws TrainingError if the loss goes non-finite.
TrainResult train(Mlp net, const TrainData& data, const TrainConfig& config, const Mlp* frozen_tail = nullptr);

// Checkpoints: JSON with dims, activation/head tags, head bounds and
// row-major weights. Doubles survive the round trip bitwise.
std::string mlp_to_json(const Mlp& net, int indent = -1);
Mlp mlp_from_json(const std::string& text);
void save_mlp(const Mlp& net, const std::string& path);
Mlp load_mlp(const std::string& path);

}  // namespace cardiotwin
