#include "core/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "core/errors.hpp"

namespace amloda {

namespace {

constexpr double kProbClamp = 1e-12;

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

std::size_t layer_block_size(int hidden, int input) {
    return static_cast<std::size_t>(kGateCount) *
           (static_cast<std::size_t>(hidden) * input + static_cast<std::size_t>(hidden) * hidden +
            hidden);
}

const char* gate_name(int gate) {
    switch (gate) {
        case kGateInput: return "input";
        case kGateForget: return "forget";
        case kGateOutput: return "output";
        default: return "cell";
    }
}

}  // namespace

LstmModel::LstmModel(int hidden_size) : hidden_(hidden_size) {
    if (hidden_size < 1) throw InvalidArgumentError("hidden size must be >= 1");
    const std::size_t total = layer_block_size(hidden_, 1) + layer_block_size(hidden_, hidden_) +
                              static_cast<std::size_t>(hidden_) + 1;
    params_.assign(total, 0.0);
}

LstmModel LstmModel::seeded(int hidden_size, std::uint64_t seed) {
    LstmModel model(hidden_size);
    std::mt19937_64 rng(seed);
    const double k = 1.0 / std::sqrt(static_cast<double>(hidden_size));
    std::uniform_real_distribution<double> dist(-k, k);
    for (double& p : model.params_) p = dist(rng);
    return model;
}

std::size_t LstmModel::w_offset(int layer, int gate) const {
    const int in = layer_input_size(layer);
    std::size_t base = layer == 0 ? 0 : layer_block_size(hidden_, 1);
    const std::size_t gate_block = static_cast<std::size_t>(hidden_) * in +
                                   static_cast<std::size_t>(hidden_) * hidden_ + hidden_;
    return base + static_cast<std::size_t>(gate) * gate_block;
}

std::size_t LstmModel::u_offset(int layer, int gate) const {
    return w_offset(layer, gate) + static_cast<std::size_t>(hidden_) * layer_input_size(layer);
}

std::size_t LstmModel::b_offset(int layer, int gate) const {
    return u_offset(layer, gate) + static_cast<std::size_t>(hidden_) * hidden_;
}

std::size_t LstmModel::dense_w_offset() const {
    return layer_block_size(hidden_, 1) + layer_block_size(hidden_, hidden_);
}

std::size_t LstmModel::dense_b_offset() const {
    return dense_w_offset() + static_cast<std::size_t>(hidden_);
}

std::string LstmModel::param_name(std::size_t index) const {
    const int H = hidden_;
    for (int layer = 0; layer < 2; ++layer) {
        const int in = layer_input_size(layer);
        for (int gate = 0; gate < kGateCount; ++gate) {
            const std::size_t w0 = w_offset(layer, gate);
            const std::size_t u0 = u_offset(layer, gate);
            const std::size_t b0 = b_offset(layer, gate);
            if (index >= w0 && index < u0) {
                const std::size_t k = index - w0;
                return "layer" + std::to_string(layer) + "." + gate_name(gate) + ".W[" +
                       std::to_string(k / in) + "," + std::to_string(k % in) + "]";
            }
            if (index >= u0 && index < b0) {
                const std::size_t k = index - u0;
                return "layer" + std::to_string(layer) + "." + gate_name(gate) + ".U[" +
                       std::to_string(k / H) + "," + std::to_string(k % H) + "]";
            }
            if (index >= b0 && index < b0 + static_cast<std::size_t>(H)) {
                return "layer" + std::to_string(layer) + "." + gate_name(gate) + ".b[" +
                       std::to_string(index - b0) + "]";
            }
        }
    }
    if (index >= dense_w_offset() && index < dense_b_offset())
        return "dense.w[" + std::to_string(index - dense_w_offset()) + "]";
    if (index == dense_b_offset()) return "dense.b";
    return "param[" + std::to_string(index) + "]";
}

bool LstmModel::finite() const {
    return std::all_of(params_.begin(), params_.end(), [](double p) { return std::isfinite(p); });
}

namespace {

// One layer of the forward recurrence. x is the layer's input sequence,
// flattened [t*in + k]; results land in the cache slot for `layer`.
void run_layer(const LstmModel& m, int layer, const double* x, std::size_t len,
               ForwardCache& cache) {
    const int H = m.hidden_size();
    const int in = m.layer_input_size(layer);
    const double* p = m.params().data();

    auto& gi = cache.gate_i[layer];
    auto& gf = cache.gate_f[layer];
    auto& go = cache.gate_o[layer];
    auto& gg = cache.gate_g[layer];
    auto& cc = cache.cell[layer];
    auto& tc = cache.tanh_cell[layer];
    auto& hh = cache.hidden_state[layer];
    gi.resize(len * H);
    gf.resize(len * H);
    go.resize(len * H);
    gg.resize(len * H);
    cc.resize(len * H);
    tc.resize(len * H);
    hh.resize(len * H);

    const double* W[kGateCount];
    const double* U[kGateCount];
    const double* b[kGateCount];
    for (int g = 0; g < kGateCount; ++g) {
        W[g] = p + m.w_offset(layer, g);
        U[g] = p + m.u_offset(layer, g);
        b[g] = p + m.b_offset(layer, g);
    }

    std::vector<double> z(static_cast<std::size_t>(kGateCount) * H);
    for (std::size_t t = 0; t < len; ++t) {
        const double* xt = x + t * in;
        const double* h_prev = t > 0 ? hh.data() + (t - 1) * H : nullptr;
        for (int g = 0; g < kGateCount; ++g) {
            double* zg = z.data() + static_cast<std::size_t>(g) * H;
            for (int j = 0; j < H; ++j) {
                double acc = b[g][j];
                const double* wrow = W[g] + static_cast<std::size_t>(j) * in;
                for (int k = 0; k < in; ++k) acc += wrow[k] * xt[k];
                if (h_prev) {
                    const double* urow = U[g] + static_cast<std::size_t>(j) * H;
                    for (int k = 0; k < H; ++k) acc += urow[k] * h_prev[k];
                }
                zg[j] = acc;
            }
        }
        double* it = gi.data() + t * H;
        double* ft = gf.data() + t * H;
        double* ot = go.data() + t * H;
        double* gt = gg.data() + t * H;
        double* ct = cc.data() + t * H;
        double* tct = tc.data() + t * H;
        double* ht = hh.data() + t * H;
        const double* c_prev = t > 0 ? cc.data() + (t - 1) * H : nullptr;
        for (int j = 0; j < H; ++j) {
            it[j] = sigmoid(z[static_cast<std::size_t>(kGateInput) * H + j]);
            ft[j] = sigmoid(z[static_cast<std::size_t>(kGateForget) * H + j]);
            ot[j] = sigmoid(z[static_cast<std::size_t>(kGateOutput) * H + j]);
            gt[j] = std::tanh(z[static_cast<std::size_t>(kGateCell) * H + j]);
            ct[j] = (c_prev ? ft[j] * c_prev[j] : 0.0) + it[j] * gt[j];
            tct[j] = std::tanh(ct[j]);
            ht[j] = ot[j] * tct[j];
            if (!std::isfinite(ct[j]) || !std::isfinite(ht[j]))
                throw NumericError("non-finite LSTM state at timestep " + std::to_string(t));
        }
    }
}

// BPTT through one layer. d_relu_out is the loss gradient with respect to
// relu(h) at every timestep; returns the gradient with respect to the
// layer's inputs and accumulates parameter gradients into grads.
std::vector<double> layer_backward(const LstmModel& m, int layer, const double* x,
                                   std::size_t len, const ForwardCache& cache,
                                   const std::vector<double>& d_relu_out,
                                   std::vector<double>& grads) {
    const int H = m.hidden_size();
    const int in = m.layer_input_size(layer);
    const double* p = m.params().data();

    const auto& gi = cache.gate_i[layer];
    const auto& gf = cache.gate_f[layer];
    const auto& go = cache.gate_o[layer];
    const auto& gg = cache.gate_g[layer];
    const auto& cc = cache.cell[layer];
    const auto& tc = cache.tanh_cell[layer];
    const auto& hh = cache.hidden_state[layer];

    const double* W[kGateCount];
    const double* U[kGateCount];
    double* dW[kGateCount];
    double* dU[kGateCount];
    double* db[kGateCount];
    for (int g = 0; g < kGateCount; ++g) {
        W[g] = p + m.w_offset(layer, g);
        U[g] = p + m.u_offset(layer, g);
        dW[g] = grads.data() + m.w_offset(layer, g);
        dU[g] = grads.data() + m.u_offset(layer, g);
        db[g] = grads.data() + m.b_offset(layer, g);
    }

    std::vector<double> dx(len * in, 0.0);
    std::vector<double> dh_next(H, 0.0), dc_next(H, 0.0);
    std::vector<double> dz(static_cast<std::size_t>(kGateCount) * H);
    std::vector<double> dh_prev_acc(H);

    for (std::size_t t = len; t-- > 0;) {
        const double* it = gi.data() + t * H;
        const double* ft = gf.data() + t * H;
        const double* ot = go.data() + t * H;
        const double* gt = gg.data() + t * H;
        const double* tct = tc.data() + t * H;
        const double* ht = hh.data() + t * H;
        const double* c_prev = t > 0 ? cc.data() + (t - 1) * H : nullptr;
        const double* h_prev = t > 0 ? hh.data() + (t - 1) * H : nullptr;
        const double* xt = x + t * in;

        for (int j = 0; j < H; ++j) {
            const double dh = (ht[j] > 0.0 ? d_relu_out[t * H + j] : 0.0) + dh_next[j];
            const double dc = dc_next[j] + dh * ot[j] * (1.0 - tct[j] * tct[j]);
            const double do_ = dh * tct[j];
            const double di = dc * gt[j];
            const double dg = dc * it[j];
            const double df = c_prev ? dc * c_prev[j] : 0.0;
            dz[static_cast<std::size_t>(kGateInput) * H + j] = di * it[j] * (1.0 - it[j]);
            dz[static_cast<std::size_t>(kGateForget) * H + j] = df * ft[j] * (1.0 - ft[j]);
            dz[static_cast<std::size_t>(kGateOutput) * H + j] = do_ * ot[j] * (1.0 - ot[j]);
            dz[static_cast<std::size_t>(kGateCell) * H + j] = dg * (1.0 - gt[j] * gt[j]);
            dc_next[j] = dc * ft[j];
        }

        std::fill(dh_prev_acc.begin(), dh_prev_acc.end(), 0.0);
        for (int g = 0; g < kGateCount; ++g) {
            const double* dzg = dz.data() + static_cast<std::size_t>(g) * H;
            for (int j = 0; j < H; ++j) {
                const double d = dzg[j];
                if (d == 0.0) continue;
                double* wrow = dW[g] + static_cast<std::size_t>(j) * in;
                const double* wsrc = W[g] + static_cast<std::size_t>(j) * in;
                for (int k = 0; k < in; ++k) {
                    wrow[k] += d * xt[k];
                    dx[t * in + k] += wsrc[k] * d;
                }
                if (h_prev) {
                    double* urow = dU[g] + static_cast<std::size_t>(j) * H;
                    for (int k = 0; k < H; ++k) urow[k] += d * h_prev[k];
                }
                const double* usrc = U[g] + static_cast<std::size_t>(j) * H;
                for (int k = 0; k < H; ++k) dh_prev_acc[k] += usrc[k] * d;
                db[g][j] += d;
            }
        }
        dh_next = dh_prev_acc;
    }
    return dx;
}

}  // namespace

ForwardCache lstm_forward(const LstmModel& model, std::span<const double> window) {
    if (window.empty()) throw InvalidArgumentError("empty input window");
    for (std::size_t t = 0; t < window.size(); ++t)
        if (!std::isfinite(window[t]))
            throw NumericError("non-finite input at timestep " + std::to_string(t));

    const int H = model.hidden_size();
    const std::size_t L = window.size();
    ForwardCache cache;
    cache.window_len = L;
    cache.hidden = H;

    run_layer(model, 0, window.data(), L, cache);

    // layer 1 consumes relu(h) of layer 0
    std::vector<double> a0(L * H);
    const auto& h0 = cache.hidden_state[0];
    for (std::size_t i = 0; i < a0.size(); ++i) a0[i] = relu(h0[i]);
    run_layer(model, 1, a0.data(), L, cache);

    const double* dense_w = model.params().data() + model.dense_w_offset();
    const double* h1_last = cache.hidden_state[1].data() + (L - 1) * H;
    double logit = model.params()[model.dense_b_offset()];
    for (int j = 0; j < H; ++j) logit += dense_w[j] * relu(h1_last[j]);
    if (!std::isfinite(logit))
        throw NumericError("non-finite logit at timestep " + std::to_string(L - 1));
    cache.logit = logit;
    cache.prob = sigmoid(logit);
    return cache;
}

double bce_loss(double probability, int label) {
    if (label != 0 && label != 1) throw InvalidArgumentError("label must be 0 or 1");
    const double p = std::clamp(probability, kProbClamp, 1.0 - kProbClamp);
    return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

GradientBundle backward(const LstmModel& model, const ForwardCache& cache,
                        std::span<const double> window, int label) {
    const int H = model.hidden_size();
    const std::size_t L = window.size();
    if (cache.window_len != L || cache.hidden != H)
        throw InvalidArgumentError("cache does not match model/window");

    GradientBundle bundle;
    bundle.param_grads.assign(model.param_count(), 0.0);

    // d loss / d logit for sigmoid + binary cross-entropy
    const double dlogit = cache.prob - static_cast<double>(label);

    const double* dense_w = model.params().data() + model.dense_w_offset();
    double* d_dense_w = bundle.param_grads.data() + model.dense_w_offset();
    const double* h1_last = cache.hidden_state[1].data() + (L - 1) * H;

    std::vector<double> da1(L * H, 0.0);
    for (int j = 0; j < H; ++j) {
        d_dense_w[j] += dlogit * relu(h1_last[j]);
        da1[(L - 1) * H + j] = dlogit * dense_w[j];
    }
    bundle.param_grads[model.dense_b_offset()] += dlogit;

    // inputs to layer 1 are relu(h) of layer 0
    std::vector<double> a0(L * H);
    const auto& h0 = cache.hidden_state[0];
    for (std::size_t i = 0; i < a0.size(); ++i) a0[i] = relu(h0[i]);

    const std::vector<double> da0 =
        layer_backward(model, 1, a0.data(), L, cache, da1, bundle.param_grads);
    bundle.input_grad = layer_backward(model, 0, window.data(), L, cache, da0,
                                       bundle.param_grads);
    return bundle;
}

Prediction predict(const LstmModel& model, std::span<const double> window) {
    const ForwardCache cache = lstm_forward(model, window);
    return {cache.prob, cache.prob >= 0.5 ? 1 : 0};
}

TrainResult train(LstmModel& model, const WindowedDataset& train_set, const TrainConfig& config) {
    if (train_set.size() == 0) throw InvalidArgumentError("empty training set");
    if (config.learning_rate <= 0) throw InvalidArgumentError("learning_rate must be > 0");
    if (config.batch_size < 1) throw InvalidArgumentError("batch_size must be >= 1");
    if (config.epochs < 0) throw InvalidArgumentError("epochs must be >= 0");

    // Mini-batch gradient descent with Adam's per-parameter step scaling.
    // The 0-1 normalization leaves most inputs in a narrow band near zero,
    // which starves fixed-step SGD; adaptive scaling trains in seconds.
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kAdamEps = 1e-8;

    TrainResult result;
    const std::size_t n = train_set.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(config.seed);
    std::vector<double> batch_grads(model.param_count());
    std::vector<double> moment1(model.param_count(), 0.0);
    std::vector<double> moment2(model.param_count(), 0.0);
    double beta1_pow = 1.0, beta2_pow = 1.0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
            const std::size_t end = std::min(n, begin + config.batch_size);
            std::fill(batch_grads.begin(), batch_grads.end(), 0.0);
            for (std::size_t b = begin; b < end; ++b) {
                const auto w = train_set.window(order[b]);
                const int y = train_set.label(order[b]);
                const ForwardCache cache = lstm_forward(model, w);
                loss_sum += bce_loss(cache.prob, y);
                const GradientBundle g = backward(model, cache, w, y);
                for (std::size_t k = 0; k < batch_grads.size(); ++k)
                    batch_grads[k] += g.param_grads[k];
            }
            const double inv_batch = 1.0 / static_cast<double>(end - begin);
            beta1_pow *= kBeta1;
            beta2_pow *= kBeta2;
            auto& params = model.params();
            for (std::size_t k = 0; k < params.size(); ++k) {
                const double g = batch_grads[k] * inv_batch;
                moment1[k] = kBeta1 * moment1[k] + (1.0 - kBeta1) * g;
                moment2[k] = kBeta2 * moment2[k] + (1.0 - kBeta2) * g * g;
                const double m_hat = moment1[k] / (1.0 - beta1_pow);
                const double v_hat = moment2[k] / (1.0 - beta2_pow);
                params[k] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + kAdamEps);
            }
        }
        const double mean_loss = loss_sum / static_cast<double>(n);
        if (!std::isfinite(mean_loss))
            throw NumericError("training diverged at epoch " + std::to_string(epoch));
        result.loss_history.push_back(mean_loss);
    }
    return result;
}

GradCheckResult grad_check(const LstmModel& model, std::span<const double> window, int label) {
    constexpr double kStep = 1e-5;
    const ForwardCache cache = lstm_forward(model, window);
    const GradientBundle analytic = backward(model, cache, window, label);

    GradCheckResult result;
    auto consider = [&](double a, double fd, const std::string& name) {
        const double denom = std::max({std::abs(a), std::abs(fd), 1e-6});
        const double rel = std::abs(a - fd) / denom;
        if (rel > result.max_rel_error) {
            result.max_rel_error = rel;
            result.worst_coordinate = name;
        }
    };

    LstmModel probe = model;
    for (std::size_t k = 0; k < probe.param_count(); ++k) {
        const double saved = probe.params()[k];
        probe.params()[k] = saved + kStep;
        const double up = bce_loss(lstm_forward(probe, window).prob, label);
        probe.params()[k] = saved - kStep;
        const double down = bce_loss(lstm_forward(probe, window).prob, label);
        probe.params()[k] = saved;
        consider(analytic.param_grads[k], (up - down) / (2 * kStep), model.param_name(k));
    }

    std::vector<double> w(window.begin(), window.end());
    for (std::size_t t = 0; t < w.size(); ++t) {
        const double saved = w[t];
        w[t] = saved + kStep;
        const double up = bce_loss(lstm_forward(model, w).prob, label);
        w[t] = saved - kStep;
        const double down = bce_loss(lstm_forward(model, w).prob, label);
        w[t] = saved;
        consider(analytic.input_grad[t], (up - down) / (2 * kStep),
                 "input[" + std::to_string(t) + "]");
    }
    return result;
}

namespace {

nlohmann::json gate_arrays(const LstmModel& m, int layer, int gate) {
    const auto& p = m.params();
    const int H = m.hidden_size();
    const int in = m.layer_input_size(layer);
    auto slice = [&](std::size_t off, std::size_t count) {
        return std::vector<double>(p.begin() + static_cast<std::ptrdiff_t>(off),
                                   p.begin() + static_cast<std::ptrdiff_t>(off + count));
    };
    return {{"w", slice(m.w_offset(layer, gate), static_cast<std::size_t>(H) * in)},
            {"u", slice(m.u_offset(layer, gate), static_cast<std::size_t>(H) * H)},
            {"b", slice(m.b_offset(layer, gate), static_cast<std::size_t>(H))}};
}

}  // namespace

std::string model_to_json(const LstmModel& model, const TrainConfig& config) {
    nlohmann::json doc;
    doc["layer_specs"] = {{"input_size", 1},
                          {"lstm_layers", 2},
                          {"hidden_size", model.hidden_size()},
                          {"output_size", 1}};
    for (int layer = 0; layer < 2; ++layer) {
        nlohmann::json& dst = doc["params"]["layer" + std::to_string(layer)];
        for (int gate = 0; gate < kGateCount; ++gate)
            dst[gate_name(gate)] = gate_arrays(model, layer, gate);
    }
    const auto& p = model.params();
    doc["params"]["dense"] = {
        {"w", std::vector<double>(p.begin() + static_cast<std::ptrdiff_t>(model.dense_w_offset()),
                                  p.begin() + static_cast<std::ptrdiff_t>(model.dense_b_offset()))},
        {"b", p[model.dense_b_offset()]}};
    doc["seed"] = config.seed;
    doc["train_config"] = {{"epochs", config.epochs},
                           {"learning_rate", config.learning_rate},
                           {"batch_size", config.batch_size},
                           {"hidden_size", config.hidden_size},
                           {"seed", config.seed}};
    return doc.dump(2);
}

std::pair<LstmModel, TrainConfig> model_from_json(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad model JSON: ") + e.what());
    }
    try {
        const int hidden = doc.at("layer_specs").at("hidden_size").get<int>();
        LstmModel model(hidden);
        auto& params = model.params();
        auto load_block = [&](const nlohmann::json& arr, std::size_t off, std::size_t count,
                              const char* what) {
            if (!arr.is_array() || arr.size() != count)
                throw ParseError(std::string("model JSON: bad length for ") + what);
            for (std::size_t k = 0; k < count; ++k) params[off + k] = arr[k].get<double>();
        };
        const int H = hidden;
        for (int layer = 0; layer < 2; ++layer) {
            const int in = model.layer_input_size(layer);
            const nlohmann::json& src = doc.at("params").at("layer" + std::to_string(layer));
            for (int gate = 0; gate < kGateCount; ++gate) {
                const nlohmann::json& g = src.at(gate_name(gate));
                load_block(g.at("w"), model.w_offset(layer, gate),
                           static_cast<std::size_t>(H) * in, "gate w");
                load_block(g.at("u"), model.u_offset(layer, gate),
                           static_cast<std::size_t>(H) * H, "gate u");
                load_block(g.at("b"), model.b_offset(layer, gate), static_cast<std::size_t>(H),
                           "gate b");
            }
        }
        load_block(doc.at("params").at("dense").at("w"), model.dense_w_offset(),
                   static_cast<std::size_t>(H), "dense w");
        params[model.dense_b_offset()] = doc.at("params").at("dense").at("b").get<double>();

        if (!model.finite()) throw DataError("model JSON contains non-finite parameters");

        TrainConfig config;
        const nlohmann::json& tc = doc.at("train_config");
        config.epochs = tc.at("epochs").get<int>();
        config.learning_rate = tc.at("learning_rate").get<double>();
        config.batch_size = tc.at("batch_size").get<int>();
        config.hidden_size = tc.at("hidden_size").get<int>();
        config.seed = tc.at("seed").get<std::uint64_t>();
        return {std::move(model), config};
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model JSON missing fields: ") + e.what());
    }
}

}  // namespace amloda
