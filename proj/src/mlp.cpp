#include "cardiotwin/mlp.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "cardiotwin/errors.hpp"
#include "cardiotwin/rng.hpp"

namespace cardiotwin {

using nlohmann::json;

namespace {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double activate(Activation a, double x) { return a == Activation::tanh_fn ? std::tanh(x) : std::max(x, 0.0); }

/// Derivative from the pre-activation. relu uses the right-continuous
/// convention relu'(0) = 0.
double activate_deriv(Activation a, double pre) {
    if (a == Activation::tanh_fn) {
        const double th = std::tanh(pre);
        return 1.0 - th * th;
    }
    return pre > 0.0 ? 1.0 : 0.0;
}

double head_value(const Mlp& net, std::size_t d, double pre) {
    return net.head == HeadKind::linear ? pre : range_sigmoid(pre, net.head_lo[d], net.head_hi[d]);
}

double head_deriv(const Mlp& net, std::size_t d, double pre) {
    if (net.head == HeadKind::linear) return 1.0;
    const double s = sigmoid(pre);
    return (net.head_hi[d] - net.head_lo[d]) * s * (1.0 - s);
}

/// Per-layer scratch for one network; reused across samples.
struct Workspace {
    std::vector<std::vector<double>> pre;    // pre[l], dims[l+1]
    std::vector<std::vector<double>> post;   // post[l], dims[l]; post[L] is the head output
    std::vector<std::vector<double>> delta;  // delta[l] matches pre[l]

    explicit Workspace(const Mlp& net) {
        const std::size_t layers = net.layer_count();
        pre.resize(layers);
        delta.resize(layers);
        post.resize(layers + 1);
        post[0].resize(net.dims[0]);
        for (std::size_t l = 0; l < layers; ++l) {
            pre[l].resize(net.dims[l + 1]);
            delta[l].resize(net.dims[l + 1]);
            post[l + 1].resize(net.dims[l + 1]);
        }
    }
};

void forward_into(const Mlp& net, std::span<const double> input, Workspace& ws) {
    std::copy(input.begin(), input.end(), ws.post[0].begin());
    const std::size_t layers = net.layer_count();
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t out_n = net.dims[l + 1];
        const std::size_t in_n = net.dims[l];
        const double* w = net.weights[l].data();
        for (std::size_t r = 0; r < out_n; ++r) {
            double acc = net.biases[l][r];
            const double* wr = w + r * in_n;
            for (std::size_t c = 0; c < in_n; ++c) acc += wr[c] * ws.post[l][c];
            ws.pre[l][r] = acc;
        }
        const bool last = l + 1 == layers;
        for (std::size_t r = 0; r < out_n; ++r) {
            ws.post[l + 1][r] = last ? head_value(net, r, ws.pre[l][r]) : activate(net.hidden, ws.pre[l][r]);
        }
    }
}

/// Backpropagate `delta_out` (gradient w.r.t. the head output) down to the
/// input. Accumulates into `grad` when given; passing nullptr only
/// transports the signal (frozen tail).
void backward_from(const Mlp& net, const Workspace& ws, std::span<const double> delta_out, Gradients* grad,
                   std::vector<double>* delta_input, Workspace& scratch) {
    const std::size_t layers = net.layer_count();
    for (std::size_t l = layers; l-- > 0;) {
        const std::size_t out_n = net.dims[l + 1];
        const std::size_t in_n = net.dims[l];
        const bool last = l + 1 == layers;
        for (std::size_t r = 0; r < out_n; ++r) {
            const double upstream = last ? delta_out[r] : scratch.delta[l][r];
            const double local = last ? head_deriv(net, r, ws.pre[l][r]) : activate_deriv(net.hidden, ws.pre[l][r]);
            scratch.delta[l][r] = upstream * local;
        }
        if (grad != nullptr) {
            for (std::size_t r = 0; r < out_n; ++r) {
                const double d = scratch.delta[l][r];
                double* gw = grad->weights[l].data() + r * in_n;
                for (std::size_t c = 0; c < in_n; ++c) gw[c] += d * ws.post[l][c];
                grad->biases[l][r] += d;
            }
        }
        if (l > 0 || delta_input != nullptr) {
            std::vector<double>& down = l > 0 ? scratch.delta[l - 1] : *delta_input;
            down.assign(in_n, 0.0);
            const double* w = net.weights[l].data();
            for (std::size_t r = 0; r < out_n; ++r) {
                const double d = scratch.delta[l][r];
                const double* wr = w + r * in_n;
                for (std::size_t c = 0; c < in_n; ++c) down[c] += wr[c] * d;
            }
        }
    }
}

}  // namespace

double range_sigmoid(double raw, double lo, double hi) {
    if (!(hi > lo)) throw ValidationError("range_sigmoid: need lo < hi");
    double v = lo + (hi - lo) * sigmoid(raw);
    // The affine map can round onto an endpoint when sigmoid saturates; the
    // contract is the open interval, so nudge back inside.
    if (v >= hi) v = std::nextafter(hi, lo);
    if (v <= lo) v = std::nextafter(lo, hi);
    return v;
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < layer_count(); ++l) n += weights[l].size() + biases[l].size();
    return n;
}

void Mlp::validate() const {
    if (dims.size() < 2) throw ValidationError("mlp: need at least input and output dims");
    for (std::size_t d : dims) {
        if (d == 0) throw ValidationError("mlp: zero-width layer");
    }
    if (weights.size() != dims.size() - 1 || biases.size() != dims.size() - 1) {
        throw ValidationError("mlp: layer count does not match dims");
    }
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        if (weights[l].size() != dims[l + 1] * dims[l] || biases[l].size() != dims[l + 1]) {
            throw ValidationError("mlp: weight shape mismatch at layer " + std::to_string(l));
        }
        for (double v : weights[l]) {
            if (!std::isfinite(v)) throw ValidationError("mlp: non-finite weight");
        }
        for (double v : biases[l]) {
            if (!std::isfinite(v)) throw ValidationError("mlp: non-finite bias");
        }
    }
    if (head == HeadKind::range_sigmoid) {
        if (head_lo.size() != dims.back() || head_hi.size() != dims.back()) {
            throw ValidationError("mlp: head bounds must match the output width");
        }
        for (std::size_t i = 0; i < head_lo.size(); ++i) {
            if (!(head_lo[i] < head_hi[i])) throw ValidationError("mlp: head bounds need lo < hi");
        }
    } else if (!head_lo.empty() || !head_hi.empty()) {
        throw ValidationError("mlp: linear head takes no bounds");
    }
}

Mlp make_mlp(std::vector<std::size_t> dims, Activation hidden, HeadKind head, std::uint64_t seed,
             std::vector<double> head_lo, std::vector<double> head_hi) {
    Mlp net;
    net.dims = std::move(dims);
    net.hidden = hidden;
    net.head = head;
    net.head_lo = std::move(head_lo);
    net.head_hi = std::move(head_hi);

    Rng rng(seed);
    net.weights.resize(net.dims.size() - 1);
    net.biases.resize(net.dims.size() - 1);
    for (std::size_t l = 0; l + 1 < net.dims.size(); ++l) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(net.dims[l]));
        net.weights[l].resize(net.dims[l + 1] * net.dims[l]);
        net.biases[l].resize(net.dims[l + 1]);
        for (double& w : net.weights[l]) w = rng.uniform(-scale, scale);
        for (double& b : net.biases[l]) b = rng.uniform(-scale, scale);
    }
    net.validate();
    return net;
}

std::vector<double> forward(const Mlp& net, std::span<const double> input) {
    net.validate();
    if (input.size() != net.input_dim()) throw ValidationError("forward: input width mismatch");
    Workspace ws(net);
    forward_into(net, input, ws);
    return ws.post[net.layer_count()];
}

void TrainData::add(std::span<const double> x, std::span<const double> y) {
    if (input_dim == 0) {
        input_dim = x.size();
        target_dim = y.size();
    }
    if (x.size() != input_dim || y.size() != target_dim) {
        throw ValidationError("train data: inconsistent sample widths");
    }
    inputs.insert(inputs.end(), x.begin(), x.end());
    targets.insert(targets.end(), y.begin(), y.end());
}

Gradients Gradients::zeros_like(const Mlp& net) {
    Gradients g;
    g.weights.resize(net.layer_count());
    g.biases.resize(net.layer_count());
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        g.weights[l].assign(net.weights[l].size(), 0.0);
        g.biases[l].assign(net.biases[l].size(), 0.0);
    }
    return g;
}

void Gradients::scale(double s) {
    for (auto& v : weights) {
        for (double& x : v) x *= s;
    }
    for (auto& v : biases) {
        for (double& x : v) x *= s;
    }
}

namespace {

struct BatchView {
    const TrainData* data;
    const std::size_t* idx;
    std::size_t count;
};

double loss_and_grad_batch(const Mlp& net, const BatchView& batch, const Mlp* tail, Gradients& grad,
                           Workspace& ws, Workspace& tail_ws, std::vector<double>& delta_out,
                           std::vector<double>& tail_delta_in) {
    const std::size_t final_dim = tail != nullptr ? tail->output_dim() : net.output_dim();
    const double norm = 1.0 / (static_cast<double>(batch.count) * static_cast<double>(final_dim));

    double loss = 0.0;
    for (std::size_t b = 0; b < batch.count; ++b) {
        const std::size_t i = batch.idx[b];
        forward_into(net, batch.data->input(i), ws);

        const std::vector<double>* final_out;
        if (tail != nullptr) {
            forward_into(*tail, ws.post[net.layer_count()], tail_ws);
            final_out = &tail_ws.post[tail->layer_count()];
        } else {
            final_out = &ws.post[net.layer_count()];
        }

        const std::span<const double> target = batch.data->target(i);
        delta_out.resize(final_dim);
        for (std::size_t d = 0; d < final_dim; ++d) {
            const double err = (*final_out)[d] - target[d];
            loss += err * err * norm;
            delta_out[d] = 2.0 * err * norm;
        }

        if (tail != nullptr) {
            backward_from(*tail, tail_ws, delta_out, nullptr, &tail_delta_in, tail_ws);
            backward_from(net, ws, tail_delta_in, &grad, nullptr, ws);
        } else {
            backward_from(net, ws, delta_out, &grad, nullptr, ws);
        }
    }
    return loss;
}

void check_tail(const Mlp& net, const Mlp* tail) {
    if (tail != nullptr) {
        tail->validate();
        if (tail->input_dim() != net.output_dim()) {
            throw ValidationError("frozen tail input width must match the trained net's output width");
        }
    }
}

}  // namespace

LossGrad loss_and_grad(const Mlp& net, const TrainData& batch, const Mlp* frozen_tail) {
    net.validate();
    check_tail(net, frozen_tail);
    if (batch.size() == 0) throw ValidationError("loss_and_grad: empty batch");
    if (batch.input_dim != net.input_dim()) throw ValidationError("loss_and_grad: input width mismatch");
    const std::size_t final_dim = frozen_tail != nullptr ? frozen_tail->output_dim() : net.output_dim();
    if (batch.target_dim != final_dim) throw ValidationError("loss_and_grad: target width mismatch");

    LossGrad out;
    out.grad = Gradients::zeros_like(net);
    std::vector<std::size_t> idx(batch.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});

    Workspace ws(net);
    Workspace tail_ws = frozen_tail != nullptr ? Workspace(*frozen_tail) : Workspace(net);
    std::vector<double> delta_out, tail_delta_in;
    out.loss = loss_and_grad_batch(net, {&batch, idx.data(), idx.size()}, frozen_tail, out.grad, ws, tail_ws,
                                   delta_out, tail_delta_in);
    return out;
}

TrainResult train(Mlp net, const TrainData& data, const TrainConfig& config, const Mlp* frozen_tail) {
    net.validate();
    check_tail(net, frozen_tail);
    if (data.size() == 0) throw TrainingError("train: empty dataset");
    if (data.input_dim != net.input_dim()) throw TrainingError("train: input width mismatch");
    const std::size_t final_dim = frozen_tail != nullptr ? frozen_tail->output_dim() : net.output_dim();
    if (data.target_dim != final_dim) throw TrainingError("train: target width mismatch");
    if (!(config.learning_rate > 0.0)) throw TrainingError("train: learning rate must be positive");
    if (config.batch_size == 0) throw TrainingError("train: batch size must be positive");

    TrainResult result;
    result.loss_history.reserve(config.epochs);

    Gradients grad = Gradients::zeros_like(net);
    Gradients m = Gradients::zeros_like(net);  // adam first moment
    Gradients v = Gradients::zeros_like(net);  // adam second moment
    std::uint64_t adam_step = 0;

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(config.seed);

    Workspace ws(net);
    Workspace tail_ws = frozen_tail != nullptr ? Workspace(*frozen_tail) : Workspace(net);
    std::vector<double> delta_out, tail_delta_in;

    const auto apply_update = [&](std::vector<double>& w, const std::vector<double>& g, std::vector<double>& mw,
                                  std::vector<double>& vw, double bc1, double bc2) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (config.optimizer == Optimizer::sgd) {
                w[i] -= config.learning_rate * g[i];
            } else {
                mw[i] = config.adam_beta1 * mw[i] + (1.0 - config.adam_beta1) * g[i];
                vw[i] = config.adam_beta2 * vw[i] + (1.0 - config.adam_beta2) * g[i] * g[i];
                w[i] -= config.learning_rate * (mw[i] / bc1) / (std::sqrt(vw[i] / bc2) + config.adam_eps);
            }
        }
    };

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t count = std::min(config.batch_size, order.size() - start);
            for (auto& g : grad.weights) std::fill(g.begin(), g.end(), 0.0);
            for (auto& g : grad.biases) std::fill(g.begin(), g.end(), 0.0);

            const double batch_loss = loss_and_grad_batch(net, {&data, order.data() + start, count}, frozen_tail,
                                                          grad, ws, tail_ws, delta_out, tail_delta_in);
            if (!std::isfinite(batch_loss)) {
                throw TrainingError("train: loss diverged at epoch " + std::to_string(epoch));
            }
            epoch_loss += batch_loss * static_cast<double>(count);

            ++adam_step;
            const double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(adam_step));
            const double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(adam_step));
            for (std::size_t l = 0; l < net.layer_count(); ++l) {
                apply_update(net.weights[l], grad.weights[l], m.weights[l], v.weights[l], bc1, bc2);
                apply_update(net.biases[l], grad.biases[l], m.biases[l], v.biases[l], bc1, bc2);
            }
        }
        result.loss_history.push_back(epoch_loss / static_cast<double>(order.size()));
    }

    result.net = std::move(net);
    return result;
}

std::string mlp_to_json(const Mlp& net, int indent) {
    net.validate();
    json j;
    j["format"] = "cardiotwin-mlp-v1";
    j["dims"] = net.dims;
    j["hidden_activation"] = net.hidden == Activation::tanh_fn ? "tanh" : "relu";
    if (net.head == HeadKind::linear) {
        j["head"] = json{{"kind", "linear"}};
    } else {
        j["head"] = json{{"kind", "range_sigmoid"}, {"lo", net.head_lo}, {"hi", net.head_hi}};
    }
    j["weights"] = net.weights;
    j["biases"] = net.biases;
    return j.dump(indent);
}

Mlp mlp_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("mlp checkpoint: malformed JSON: ") + e.what());
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        if (k != "format" && k != "dims" && k != "hidden_activation" && k != "head" && k != "weights" &&
            k != "biases") {
            throw ValidationError("mlp checkpoint: unknown key '" + k + "'");
        }
    }
    if (!j.contains("format") || j.at("format") != "cardiotwin-mlp-v1") {
        throw ValidationError("mlp checkpoint: missing or unsupported format tag");
    }

    Mlp net;
    net.dims = j.at("dims").get<std::vector<std::size_t>>();
    const std::string act = j.at("hidden_activation").get<std::string>();
    if (act == "tanh") net.hidden = Activation::tanh_fn;
    else if (act == "relu") net.hidden = Activation::relu;
    else throw ValidationError("mlp checkpoint: unknown activation '" + act + "'");

    const json& head = j.at("head");
    const std::string kind = head.at("kind").get<std::string>();
    if (kind == "linear") {
        net.head = HeadKind::linear;
    } else if (kind == "range_sigmoid") {
        net.head = HeadKind::range_sigmoid;
        net.head_lo = head.at("lo").get<std::vector<double>>();
        net.head_hi = head.at("hi").get<std::vector<double>>();
    } else {
        throw ValidationError("mlp checkpoint: unknown head kind '" + kind + "'");
    }

    net.weights = j.at("weights").get<std::vector<std::vector<double>>>();
    net.biases = j.at("biases").get<std::vector<std::vector<double>>>();
    net.validate();
    return net;
}

void save_mlp(const Mlp& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FileError("cannot write checkpoint: " + path);
    out << mlp_to_json(net, 1) << '\n';
    if (!out) throw FileError("write failed for checkpoint: " + path);
}

Mlp load_mlp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open checkpoint: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return mlp_from_json(text);
}

}  // namespace cardiotwin
