#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/trace.hpp"

namespace amloda {

/// Gate order used throughout the flat parameter layout.
enum Gate : int { kGateInput = 0, kGateForget = 1, kGateOutput = 2, kGateCell = 3 };
constexpr int kGateCount = 4;

/// Binary occupancy classifier: input size 1, two stacked LSTM layers of
/// hidden size H with ReLU applied to each layer's hidden-state sequence,
/// then a dense read-out of the final timestep through a sigmoid.
///
/// All parameters live in one flat vector so SGD updates, finite-difference
/// probing, and serialization share a single layout:
///   layer 0..1, gate i/f/o/g: W (H x in, row-major), U (H x H), b (H)
///   then dense weights (H) and dense bias (1).
class LstmModel {
public:
    explicit LstmModel(int hidden_size);  // all-zero parameters

    /// Uniform init in [-k, k], k = 1/sqrt(H), drawn from the given seed.
    static LstmModel seeded(int hidden_size, std::uint64_t seed);

    int hidden_size() const { return hidden_; }
    std::size_t param_count() const { return params_.size(); }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    int layer_input_size(int layer) const { return layer == 0 ? 1 : hidden_; }

    /// Offset of a gate's W / U / b block within the flat vector.
    std::size_t w_offset(int layer, int gate) const;
    std::size_t u_offset(int layer, int gate) const;
    std::size_t b_offset(int layer, int gate) const;
    std::size_t dense_w_offset() const;
    std::size_t dense_b_offset() const;

    /// Human-readable name of a flat-parameter coordinate, for diagnostics.
    std::string param_name(std::size_t index) const;

    bool finite() const;

private:
    int hidden_;
    std::vector<double> params_;
};

/// Everything the backward pass needs from a forward run. Per layer and
/// timestep: gate activations, cell state, tanh(cell), hidden state.
struct ForwardCache {
    std::size_t window_len = 0;
    int hidden = 0;
    // [layer][t*H + j]
    std::vector<double> gate_i[2], gate_f[2], gate_o[2], gate_g[2];
    std::vector<double> cell[2], tanh_cell[2], hidden_state[2];
    double logit = 0.0;
    double prob = 0.0;
};

struct TrainConfig {
    int epochs = 20;
    double learning_rate = 0.05;
    int batch_size = 32;
    std::uint64_t seed = 1;
    int hidden_size = 32;
};

struct GradientBundle {
    std::vector<double> param_grads;  // same layout as LstmModel::params()
    std::vector<double> input_grad;   // d loss / d window[t]
};

struct Prediction {
    double probability;
    int label;  // [probability >= 0.5], ties classified occupied
};

struct TrainResult {
    std::vector<double> loss_history;  // one mean loss per epoch
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_coordinate;
};

/// Runs the stacked-LSTM recurrence. Deterministic; throws NumericError
/// naming the offending timestep if a non-finite state appears.
ForwardCache lstm_forward(const LstmModel& model, std::span<const double> window);

/// Binary cross-entropy with the probability clamped to
/// [1e-12, 1 - 1e-12] so the loss stays finite at the extremes.
double bce_loss(double probability, int label);

/// Exact analytic gradients of bce_loss(lstm_forward(...)) with respect to
/// every parameter and every input value, via backpropagation-through-time.
GradientBundle backward(const LstmModel& model, const ForwardCache& cache,
                        std::span<const double> window, int label);

Prediction predict(const LstmModel& model, std::span<const double> window);

/// Mini-batch SGD over the dataset; gradients averaged per batch, one
/// update per batch, batches drawn from a seeded shuffle each epoch.
/// epochs == 0 leaves the model untouched and returns an empty history.
TrainResult train(LstmModel& model, const WindowedDataset& train_set, const TrainConfig& config);

/// Compares backward() against central finite differences (step 1e-5) over
/// all parameters and inputs. Relative error uses a 1e-6 absolute floor.
GradCheckResult grad_check(const LstmModel& model, std::span<const double> window, int label);

/// Checkpoint JSON: layer sizes, flat parameter arrays named by gate and
/// layer, the training seed and config. Round-trips bit-exactly.
std::string model_to_json(const LstmModel& model, const TrainConfig& config);
std::pair<LstmModel, TrainConfig> model_from_json(const std::string& json_text);

}  // namespace amloda
