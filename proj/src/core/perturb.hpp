#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/lstm.hpp"
#include "core/trace.hpp"

namespace amloda {

struct PerturbConfig {
    double epsilon = 0.0;                 // penetration coefficient, normalized units
    std::optional<double> gamma;          // relative perturbation cap, off by default
    std::size_t pair_period = 2;          // samples between paired applications; even, >= 2
    bool use_true_labels = false;         // gradient labels: ground truth vs model's own guess
    std::size_t window_len = 60;          // look-back feeding the gradient
};

/// Noise n_t in watts, one entry per pair start index t = k * pair_period.
struct NoiseSeries {
    std::size_t pair_period = 2;
    std::vector<double> values_w;
    std::size_t warmup_zeros = 0;  // pair starts before the first full look-back window
};

/// A perturbed trace plus, for the paired scheme, one applied/skipped flag
/// per pair (the Gaussian baseline reuses the mask per sample, marking
/// floored values).
struct PerturbedTrace {
    PowerTrace trace;
    std::vector<std::uint8_t> applied_mask;
};

struct ConstraintReport {
    double epsilon = 0.0;
    std::optional<double> gamma;
    double max_relative_perturbation = 0.0;  // max |n_t| / P_t over applied pairs
    bool gamma_satisfied = true;
    double total_delta_w = 0.0;              // sum(perturbed) - sum(original), exact
    double flipped_fraction = 0.0;           // eval windows whose prediction changed
    std::size_t applied_pairs = 0;
    std::size_t skipped_pairs = 0;
    std::size_t warmup_zeros = 0;

    std::string to_json() const;
};

/// Elementwise sign of the loss gradient with respect to the window values;
/// sign(0) = 0.
std::vector<int> input_gradient_sign(const LstmModel& model, std::span<const double> window,
                                     int label);

/// For each pair start t: take the look-back window ending at t, compute
/// the gradient sign at the final position, and convert to watts via the
/// normalization range. Positions without a full window get zero noise.
NoiseSeries compute_noise(const LstmModel& model, const PowerTrace& trace,
                          const OccupancyLabels* labels, const NormParams& params,
                          const PerturbConfig& config);

/// Subtract n_t at the pair start and add it at the next sample when both
/// results stay non-negative; otherwise leave the pair unchanged. A
/// trailing sample without a partner is never touched.
PerturbedTrace apply_paired_perturbation(const PowerTrace& trace, const NoiseSeries& noise);

struct ObliviousResult {
    PerturbedTrace perturbed;
    ConstraintReport report;
};

/// compute_noise followed by apply_paired_perturbation, plus the
/// constraint report (conservation delta, gamma compliance, fraction of
/// stride-1 evaluation windows whose predicted label flips).
ObliviousResult generate_oblivious_trace(const LstmModel& model, const PowerTrace& trace,
                                         const OccupancyLabels* labels, const NormParams& params,
                                         const PerturbConfig& config);

}  // namespace amloda
