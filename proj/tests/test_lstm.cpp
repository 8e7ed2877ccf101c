#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "core/errors.hpp"
#include "core/lstm.hpp"
#include "support/fd_oracle.hpp"

using namespace amloda;

namespace {

// Hand-set micro model: H = 1, two layers, 26 parameters.
LstmModel micro_model() {
    LstmModel m(1);
    auto set = [&](std::size_t off, double v) { m.params()[off] = v; };
    // layer 0: W, U, b per gate
    set(m.w_offset(0, kGateInput), 0.5);
    set(m.u_offset(0, kGateInput), -0.3);
    set(m.b_offset(0, kGateInput), 0.1);
    set(m.w_offset(0, kGateForget), -0.2);
    set(m.u_offset(0, kGateForget), 0.4);
    set(m.b_offset(0, kGateForget), 0.2);
    set(m.w_offset(0, kGateOutput), 0.3);
    set(m.u_offset(0, kGateOutput), 0.1);
    set(m.b_offset(0, kGateOutput), -0.1);
    set(m.w_offset(0, kGateCell), 0.7);
    set(m.u_offset(0, kGateCell), -0.5);
    set(m.b_offset(0, kGateCell), 0.05);
    // layer 1
    set(m.w_offset(1, kGateInput), -0.4);
    set(m.u_offset(1, kGateInput), 0.2);
    set(m.b_offset(1, kGateInput), 0.0);
    set(m.w_offset(1, kGateForget), 0.6);
    set(m.u_offset(1, kGateForget), -0.1);
    set(m.b_offset(1, kGateForget), 0.3);
    set(m.w_offset(1, kGateOutput), -0.2);
    set(m.u_offset(1, kGateOutput), 0.5);
    set(m.b_offset(1, kGateOutput), 0.1);
    set(m.w_offset(1, kGateCell), 0.4);
    set(m.u_offset(1, kGateCell), 0.3);
    set(m.b_offset(1, kGateCell), 0.25);
    set(m.dense_w_offset(), 1.5);
    set(m.dense_b_offset(), -0.25);
    return m;
}

// Straight-line unroll of the H=1, L=2 recurrence with the micro_model
// weights; written out by hand, no loops, independent of the library path.
double unrolled_micro_prob(double x0, double x1) {
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    // layer 0, t = 0 (h_prev = c_prev = 0)
    const double i00 = sig(0.5 * x0 + 0.1);
    const double f00 = sig(-0.2 * x0 + 0.2);
    const double o00 = sig(0.3 * x0 - 0.1);
    const double g00 = std::tanh(0.7 * x0 + 0.05);
    const double c00 = i00 * g00;
    const double h00 = o00 * std::tanh(c00);
    (void)f00;  // forget gate multiplies the zero initial cell
    // layer 0, t = 1
    const double i01 = sig(0.5 * x1 - 0.3 * h00 + 0.1);
    const double f01 = sig(-0.2 * x1 + 0.4 * h00 + 0.2);
    const double o01 = sig(0.3 * x1 + 0.1 * h00 - 0.1);
    const double g01 = std::tanh(0.7 * x1 - 0.5 * h00 + 0.05);
    const double c01 = f01 * c00 + i01 * g01;
    const double h01 = o01 * std::tanh(c01);
    // relu between layers
    const double a00 = h00 > 0 ? h00 : 0;
    const double a01 = h01 > 0 ? h01 : 0;
    // layer 1, t = 0
    const double i10 = sig(-0.4 * a00 + 0.0);
    const double o10 = sig(-0.2 * a00 + 0.1);
    const double g10 = std::tanh(0.4 * a00 + 0.25);
    const double c10 = i10 * g10;
    const double h10 = o10 * std::tanh(c10);
    // layer 1, t = 1
    const double i11 = sig(-0.4 * a01 + 0.2 * h10 + 0.0);
    const double f11 = sig(0.6 * a01 - 0.1 * h10 + 0.3);
    const double o11 = sig(-0.2 * a01 + 0.5 * h10 + 0.1);
    const double g11 = std::tanh(0.4 * a01 + 0.3 * h10 + 0.25);
    const double c11 = f11 * c10 + i11 * g11;
    const double h11 = o11 * std::tanh(c11);
    // dense on the relu'd final hidden state
    const double a11 = h11 > 0 ? h11 : 0;
    return sig(1.5 * a11 - 0.25);
}

}  // namespace

TEST_CASE("all-zero parameters give probability exactly 0.5") {
    LstmModel m(3);
    const std::vector<double> window{0.1, 0.9, 0.4};
    CHECK(lstm_forward(m, window).prob == 0.5);
}

TEST_CASE("forward is deterministic") {
    const LstmModel m = LstmModel::seeded(4, 123);
    const std::vector<double> window{0.3, 0.7, 0.2, 0.9, 0.5};
    CHECK(lstm_forward(m, window).prob == lstm_forward(m, window).prob);
}

TEST_CASE("micro model matches the hand-unrolled recurrence") {
    const LstmModel m = micro_model();
    const std::vector<double> window{0.2, 0.8};
    const double prob = lstm_forward(m, window).prob;
    CHECK(prob == doctest::Approx(unrolled_micro_prob(0.2, 0.8)).epsilon(1e-12));
    // frozen from an independent straight-line evaluation of the same weights
    CHECK(prob == doctest::Approx(0.48382948893820005).epsilon(1e-12));
}

TEST_CASE("bce_loss hand values") {
    CHECK(bce_loss(0.5, 1) == doctest::Approx(0.6931471805599453).epsilon(1e-12));
    CHECK(bce_loss(0.5, 0) == doctest::Approx(0.6931471805599453).epsilon(1e-12));
    CHECK(bce_loss(1.0 - 1e-12, 1) == doctest::Approx(0.0).epsilon(1e-9));
    // clamp keeps the extremes finite
    CHECK(std::isfinite(bce_loss(0.0, 1)));
    CHECK(std::isfinite(bce_loss(1.0, 0)));
}

TEST_CASE("analytic gradients match finite differences on random micro models") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> hidden(1, 4);
    std::uniform_int_distribution<int> window_len(2, 8);
    std::uniform_int_distribution<int> label(0, 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const LstmModel m = LstmModel::seeded(hidden(rng), rng());
        std::vector<double> window(window_len(rng));
        for (double& v : window) v = unit(rng);
        const int y = label(rng);
        const ForwardCache cache = lstm_forward(m, window);
        const GradientBundle analytic = backward(m, cache, window, y);
        CHECK(fd_oracle::max_rel_error(m, window, y, analytic) < 1e-4);
    }
}

TEST_CASE("dead network: input gradient is all zeros for both labels") {
    LstmModel m(2);
    const std::vector<double> window{0.4, 0.6, 0.1};
    for (int y : {0, 1}) {
        const ForwardCache cache = lstm_forward(m, window);
        const GradientBundle g = backward(m, cache, window, y);
        for (double v : g.input_grad) CHECK(v == 0.0);
    }
}

TEST_CASE("negative control: a corrupted gradient is caught by the oracle") {
    const LstmModel m = micro_model();
    const std::vector<double> window{0.2, 0.8};
    const ForwardCache cache = lstm_forward(m, window);
    GradientBundle g = backward(m, cache, window, 1);
    const std::size_t victim = m.dense_w_offset();
    g.param_grads[victim] += 0.5;
    const double fd = fd_oracle::central_diff_param(m, window, 1, victim);
    CHECK(fd_oracle::rel_error(g.param_grads[victim], fd) > 1e-2);
}

TEST_CASE("grad_check agrees with the test-side oracle") {
    const LstmModel m = LstmModel::seeded(2, 5);
    const std::vector<double> window{0.1, 0.5, 0.9, 0.3};
    const GradCheckResult r = grad_check(m, window, 1);
    CHECK(r.max_rel_error < 1e-4);
    CHECK_FALSE(r.worst_coordinate.empty());
}

TEST_CASE("micro model gradients stay tight") {
    const LstmModel m = micro_model();
    const std::vector<double> window{0.2, 0.8};
    const GradCheckResult r = grad_check(m, window, 1);
    CHECK(r.max_rel_error < 1e-6);
}

namespace {

WindowedDataset separable_set(std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.05, 0.05);
    std::vector<double> series;
    std::vector<std::size_t> starts;
    std::vector<std::uint8_t> labels;
    const std::size_t L = 4;
    for (std::size_t i = 0; i < count; ++i) {
        const bool hot = i % 2 == 1;  // high watts <=> occupied
        starts.push_back(series.size());
        for (std::size_t t = 0; t < L; ++t)
            series.push_back((hot ? 0.85 : 0.15) + jitter(rng));
        labels.push_back(hot ? 1 : 0);
    }
    return WindowedDataset(std::move(series), std::move(starts), std::move(labels), L);
}

double train_accuracy(const LstmModel& m, const WindowedDataset& ds) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (predict(m, ds.window(i)).label == ds.label(i)) ++correct;
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

}  // namespace

TEST_CASE("training separates a linearly separable synthetic set") {
    const WindowedDataset ds = separable_set(64, 42);
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 8;
    cfg.hidden_size = 4;
    cfg.seed = 1;
    LstmModel m = LstmModel::seeded(cfg.hidden_size, cfg.seed);
    const TrainResult r = train(m, ds, cfg);
    REQUIRE(r.loss_history.size() == 60);
    CHECK(train_accuracy(m, ds) >= 0.95);
}

TEST_CASE("zero epochs leave the model unchanged with empty history") {
    const WindowedDataset ds = separable_set(8, 1);
    TrainConfig cfg;
    cfg.epochs = 0;
    cfg.hidden_size = 2;
    LstmModel m = LstmModel::seeded(2, 9);
    const std::vector<double> before = m.params();
    const TrainResult r = train(m, ds, cfg);
    CHECK(r.loss_history.empty());
    CHECK(m.params() == before);
}

TEST_CASE("training is bit-deterministic for a fixed seed") {
    const WindowedDataset ds = separable_set(32, 3);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.hidden_size = 3;
    cfg.seed = 77;
    LstmModel a = LstmModel::seeded(cfg.hidden_size, cfg.seed);
    LstmModel b = LstmModel::seeded(cfg.hidden_size, cfg.seed);
    train(a, ds, cfg);
    train(b, ds, cfg);
    CHECK(a.params() == b.params());
}

TEST_CASE("epoch-mean loss shrinks on the separable set (lr 0.05)") {
    const WindowedDataset ds = separable_set(64, 42);
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 8;
    cfg.hidden_size = 4;
    cfg.seed = 1;
    LstmModel m = LstmModel::seeded(cfg.hidden_size, cfg.seed);
    const TrainResult r = train(m, ds, cfg);
    CHECK(r.loss_history[9] < r.loss_history[0]);
}

TEST_CASE("predict thresholds at 0.5 with ties classified occupied") {
    LstmModel zero(2);  // probability exactly 0.5
    const std::vector<double> window{0.2, 0.4};
    const Prediction p = predict(zero, window);
    CHECK(p.probability == 0.5);
    CHECK(p.label == 1);
}

TEST_CASE("forward output stays inside (0,1) for random models") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const LstmModel m = LstmModel::seeded(3, rng());
        std::vector<double> window(6);
        for (double& v : window) v = unit(rng);
        const double p = lstm_forward(m, window).prob;
        CHECK(p > 0.0);
        CHECK(p < 1.0);
    }
}

TEST_CASE("model checkpoint JSON round-trips bit-exactly") {
    const LstmModel m = LstmModel::seeded(5, 31337);
    TrainConfig cfg;
    cfg.epochs = 7;
    cfg.learning_rate = 0.01;
    cfg.batch_size = 16;
    cfg.hidden_size = 5;
    cfg.seed = 31337;
    const std::string text = model_to_json(m, cfg);
    const auto [restored, restored_cfg] = model_from_json(text);
    CHECK(restored.params() == m.params());
    CHECK(restored_cfg.epochs == cfg.epochs);
    CHECK(restored_cfg.learning_rate == cfg.learning_rate);
    CHECK(restored_cfg.seed == cfg.seed);
    CHECK(model_to_json(restored, restored_cfg) == text);
}

TEST_CASE("non-finite input names the offending timestep") {
    const LstmModel m = LstmModel::seeded(2, 1);
    const std::vector<double> window{0.5, std::nan("")};
    CHECK_THROWS_WITH_AS(lstm_forward(m, window), doctest::Contains("timestep 1"), NumericError);
}
