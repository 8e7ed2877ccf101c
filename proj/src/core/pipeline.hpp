#pragma once

#include <string>
#include <vector>

#include "core/lstm.hpp"
#include "core/metrics.hpp"
#include "core/trace.hpp"

namespace amloda {

/// Windowing and split policy stored alongside the trained model so every
/// later evaluation reproduces the same test region.
struct AttackConfig {
    std::size_t window_len = 60;
    std::size_t train_stride = 60;  // non-overlapping windows for training
    std::size_t eval_stride = 1;
    double train_fraction = 0.8;
};

/// The deployable artifact: model plus the normalization it was trained
/// under and the windowing policy.
struct TrainedAttack {
    LstmModel model;
    NormParams norm;
    AttackConfig attack;
    TrainConfig train_cfg;
};

struct TrainOutcome {
    TrainedAttack attack;
    std::vector<double> loss_history;
    EvalReport test_report;  // stride eval_stride over the held-out tail
};

enum class EvalSplit { kTestTail, kAll };

/// First sample index of the held-out region for a trace of n samples:
/// everything covered by the train windows is excluded.
std::size_t test_start_sample(const AttackConfig& cfg, std::size_t n_samples);

/// Normalize, window (train_stride), split chronologically, train, then
/// report metrics on the held-out tail. The trace must be clean.
TrainOutcome train_attack(const PowerTrace& trace, const OccupancyLabels& labels,
                          const TrainConfig& train_cfg, const AttackConfig& attack_cfg);

/// Scores a (possibly perturbed) trace against the attack using its stored
/// normalization. kTestTail restricts windows to the held-out region.
EvalReport evaluate_attack(const TrainedAttack& attack, const PowerTrace& trace,
                           const OccupancyLabels& labels, EvalSplit split);

/// Checkpoint JSON: the model document extended with normalization and
/// windowing. Round-trips bit-exactly.
std::string checkpoint_to_json(const TrainedAttack& attack);
TrainedAttack checkpoint_from_json(const std::string& json_text);
void save_checkpoint(const TrainedAttack& attack, const std::string& path);
TrainedAttack load_checkpoint(const std::string& path);

}  // namespace amloda
