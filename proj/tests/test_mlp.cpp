#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cardiotwin/errors.hpp"
#include "cardiotwin/mlp.hpp"
#include "cardiotwin/rng.hpp"

using namespace cardiotwin;

namespace {

TrainData toy_regression(std::size_t n, std::uint64_t seed) {
    // Targets [x0 + x1, x0 - x1]: linear, so a small net fits it quickly.
    TrainData data;
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double x0 = rng.uniform(-1.0, 1.0);
        const double x1 = rng.uniform(-1.0, 1.0);
        const std::vector<double> x{x0, x1};
        const std::vector<double> y{x0 + x1, x0 - x1};
        data.add(x, y);
    }
    return data;
}

double batch_loss(const Mlp& net, const TrainData& data, const Mlp* tail = nullptr) {
    return loss_and_grad(net, data, tail).loss;
}

}  // namespace

TEST_CASE("range squash maps a raw logit to the frozen in-band value") {
    // sigmoid(ln 3) = 0.75, so the squash lands three quarters into the band.
    CHECK(range_sigmoid(std::log(3.0), 0.005, 0.1) == doctest::Approx(0.07625).epsilon(1e-12));
    CHECK(range_sigmoid(0.0, -2.0, 4.0) == doctest::Approx(1.0));
}

TEST_CASE("range squash stays strictly inside the band for extreme logits") {
    const double lo = 0.4, hi = 1.7;
    for (double raw : {-1e3, -40.0, 0.0, 40.0, 1e3}) {
        const double v = range_sigmoid(raw, lo, hi);
        CHECK(v > lo);
        CHECK(v < hi);
    }
}

TEST_CASE("network construction lays out seeded weights by fan-in") {
    const Mlp net = make_mlp({3, 4, 2}, Activation::tanh_fn, HeadKind::linear, 1234);
    REQUIRE(net.layer_count() == 2);
    REQUIRE(net.weights[0].size() == 12);
    REQUIRE(net.biases[0].size() == 4);
    REQUIRE(net.weights[1].size() == 8);
    REQUIRE(net.biases[1].size() == 2);
    CHECK(net.parameter_count() == 26);
    CHECK(net.input_dim() == 3);
    CHECK(net.output_dim() == 2);

    for (double w : net.weights[0]) CHECK(std::abs(w) <= 1.0 / std::sqrt(3.0));
    for (double w : net.weights[1]) CHECK(std::abs(w) <= 0.5);

    const Mlp again = make_mlp({3, 4, 2}, Activation::tanh_fn, HeadKind::linear, 1234);
    CHECK(net.weights == again.weights);
    CHECK(net.biases == again.biases);
    const Mlp other = make_mlp({3, 4, 2}, Activation::tanh_fn, HeadKind::linear, 1235);
    CHECK(net.weights != other.weights);
}

TEST_CASE("forward pass of a hand-wired linear map") {
    Mlp net;
    net.dims = {2, 2};
    net.weights = {{1.0, 2.0, 3.0, 4.0}};
    net.biases = {{0.5, -0.5}};
    net.hidden = Activation::tanh_fn;
    net.head = HeadKind::linear;
    net.validate();
    const auto out = forward(net, std::vector<double>{1.0, 1.0});
    REQUIRE(out.size() == 2);
    CHECK(out[0] == doctest::Approx(3.5));
    CHECK(out[1] == doctest::Approx(6.5));
}

TEST_CASE("forward pass applies the hidden activation") {
    Mlp net;
    net.dims = {1, 1, 1};
    net.weights = {{2.0}, {1.0}};
    net.biases = {{0.0}, {0.0}};
    net.hidden = Activation::tanh_fn;
    net.head = HeadKind::linear;
    CHECK(forward(net, std::vector<double>{0.3})[0] == doctest::Approx(std::tanh(0.6)));

    net.hidden = Activation::relu;
    CHECK(forward(net, std::vector<double>{0.3})[0] == doctest::Approx(0.6));
    CHECK(forward(net, std::vector<double>{-0.3})[0] == 0.0);
}

TEST_CASE("forward pass squashes a bounded head per output") {
    Mlp net;
    net.dims = {1, 2};
    net.weights = {{0.0, 0.0}};
    net.biases = {{std::log(3.0), 0.0}};
    net.hidden = Activation::tanh_fn;
    net.head = HeadKind::range_sigmoid;
    net.head_lo = {0.005, 10.0};
    net.head_hi = {0.1, 30.0};
    const auto out = forward(net, std::vector<double>{0.7});
    CHECK(out[0] == doctest::Approx(0.07625));
    CHECK(out[1] == doctest::Approx(20.0));
}

TEST_CASE("network validation guards the invariants") {
    Mlp net = make_mlp({2, 3, 1}, Activation::relu, HeadKind::linear, 7);
    CHECK_NOTHROW(net.validate());

    SUBCASE("needs at least input and output") {
        net.dims = {4};
        CHECK_THROWS_AS(net.validate(), ValidationError);
    }
    SUBCASE("weight shapes must match dims") {
        net.weights[0].pop_back();
        CHECK_THROWS_AS(net.validate(), ValidationError);
    }
    SUBCASE("bounded head needs per-output bounds") {
        net.head = HeadKind::range_sigmoid;
        CHECK_THROWS_AS(net.validate(), ValidationError);
    }
    SUBCASE("head bounds must be ordered") {
        net.head = HeadKind::range_sigmoid;
        net.head_lo = {2.0};
        net.head_hi = {1.0};
        CHECK_THROWS_AS(net.validate(), ValidationError);
    }
}

TEST_CASE("analytic gradients agree with central differences") {
    Mlp net = make_mlp({2, 3, 2}, Activation::tanh_fn, HeadKind::linear, 99);
    TrainData batch = toy_regression(5, 3);
    const LossGrad lg = loss_and_grad(net, batch);

    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t layer = 0; layer < net.layer_count(); ++layer) {
        for (std::size_t i = 0; i < net.weights[layer].size(); ++i) {
            Mlp plus = net, minus = net;
            plus.weights[layer][i] += h;
            minus.weights[layer][i] -= h;
            const double fd = (batch_loss(plus, batch) - batch_loss(minus, batch)) / (2.0 * h);
            const double an = lg.grad.weights[layer][i];
            worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6}));
        }
        for (std::size_t i = 0; i < net.biases[layer].size(); ++i) {
            Mlp plus = net, minus = net;
            plus.biases[layer][i] += h;
            minus.biases[layer][i] -= h;
            const double fd = (batch_loss(plus, batch) - batch_loss(minus, batch)) / (2.0 * h);
            const double an = lg.grad.biases[layer][i];
            worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6}));
        }
    }
    CHECK(worst < 1e-7);
}

TEST_CASE("gradients flow through a frozen tail without touching it") {
    Mlp net = make_mlp({2, 4, 3}, Activation::tanh_fn, HeadKind::range_sigmoid, 11,
                       {-1.0, -1.0, -1.0}, {1.0, 1.0, 1.0});
    const Mlp tail = make_mlp({3, 4, 2}, Activation::tanh_fn, HeadKind::linear, 12);

    // Targets sized for the tail output, not the net output.
    TrainData batch;
    Rng rng(5);
    for (int i = 0; i < 4; ++i) {
        const std::vector<double> x{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        const std::vector<double> y{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
        batch.add(x, y);
    }

    const LossGrad lg = loss_and_grad(net, batch, &tail);
    REQUIRE(lg.grad.weights.size() == net.layer_count());

    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t layer = 0; layer < net.layer_count(); ++layer) {
        for (std::size_t i = 0; i < net.weights[layer].size(); ++i) {
            Mlp plus = net, minus = net;
            plus.weights[layer][i] += h;
            minus.weights[layer][i] -= h;
            const double fd =
                (batch_loss(plus, batch, &tail) - batch_loss(minus, batch, &tail)) / (2.0 * h);
            const double an = lg.grad.weights[layer][i];
            worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6}));
        }
    }
    CHECK(worst < 1e-7);
}

TEST_CASE("training is deterministic and reduces the loss") {
    const TrainData data = toy_regression(200, 42);
    TrainConfig config;
    config.learning_rate = 3e-3;
    config.batch_size = 20;
    config.epochs = 60;
    config.seed = 5;

    const Mlp init = make_mlp({2, 8, 2}, Activation::tanh_fn, HeadKind::linear, 5151);
    const TrainResult a = train(init, data, config);
    const TrainResult b = train(init, data, config);

    REQUIRE(a.loss_history.size() == 60);
    CHECK(a.loss_history == b.loss_history);
    CHECK(a.net.weights == b.net.weights);
    CHECK(a.net.biases == b.net.biases);
    CHECK(a.loss_history.back() < 0.05 * a.loss_history.front());
}

TEST_CASE("training visits the trailing short batch") {
    // 7 samples with batch size 4: the second batch holds 3 samples. The
    // loss history must still be finite and shrinking on a linear problem.
    const TrainData data = toy_regression(7, 9);
    TrainConfig config;
    config.batch_size = 4;
    config.epochs = 40;
    config.learning_rate = 5e-3;
    const TrainResult r = train(make_mlp({2, 6, 2}, Activation::tanh_fn, HeadKind::linear, 3), data, config);
    CHECK(std::isfinite(r.loss_history.back()));
    CHECK(r.loss_history.back() < r.loss_history.front());
}

TEST_CASE("training rejects mismatched data") {
    TrainData data = toy_regression(10, 1);
    Mlp net = make_mlp({3, 4, 2}, Activation::tanh_fn, HeadKind::linear, 2);  // wants 3 inputs
    TrainConfig config;
    config.epochs = 1;
    CHECK_THROWS_AS(train(net, data, config), TrainingError);
}

TEST_CASE("checkpoint JSON round trips bitwise") {
    Mlp net = make_mlp({4, 6, 3}, Activation::relu, HeadKind::range_sigmoid, 321,
                       {-1.0, 0.0, 2.0}, {1.0, 5.0, 3.0});
    const Mlp back = mlp_from_json(mlp_to_json(net));
    CHECK(back.dims == net.dims);
    CHECK(back.weights == net.weights);
    CHECK(back.biases == net.biases);
    CHECK(back.hidden == net.hidden);
    CHECK(back.head == net.head);
    CHECK(back.head_lo == net.head_lo);
    CHECK(back.head_hi == net.head_hi);
}

TEST_CASE("checkpoint JSON rejects malformed payloads") {
    CHECK_THROWS_AS(mlp_from_json("{}"), ValidationError);
    CHECK_THROWS_AS(mlp_from_json("not json"), ValidationError);
    Mlp net = make_mlp({2, 2}, Activation::tanh_fn, HeadKind::linear, 1);
    std::string text = mlp_to_json(net);
    text.insert(text.rfind('}'), ",\"mystery\":3");
    CHECK_THROWS_AS(mlp_from_json(text), ValidationError);
}
