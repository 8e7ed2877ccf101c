#include "core/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "core/errors.hpp"

namespace amloda {

namespace {

void validate(const PerturbConfig& c) {
    if (c.epsilon < 0) throw InvalidArgumentError("epsilon must be >= 0");
    if (c.gamma && *c.gamma <= 0) throw InvalidArgumentError("gamma must be > 0 when set");
    if (c.pair_period < 2 || c.pair_period % 2 != 0)
        throw InvalidArgumentError("pair_period must be even and >= 2");
    if (c.window_len < 1) throw InvalidArgumentError("window_len must be >= 1");
}

}  // namespace

std::string ConstraintReport::to_json() const {
    nlohmann::json doc;
    doc["epsilon"] = epsilon;
    if (gamma)
        doc["gamma"] = *gamma;
    else
        doc["gamma"] = nullptr;
    doc["max_relative_perturbation"] =
        std::isfinite(max_relative_perturbation) ? nlohmann::json(max_relative_perturbation)
                                                 : nlohmann::json(nullptr);
    doc["gamma_satisfied"] = gamma_satisfied;
    doc["total_delta_w"] = total_delta_w;
    doc["flipped_fraction"] = flipped_fraction;
    doc["applied_pairs"] = applied_pairs;
    doc["skipped_pairs"] = skipped_pairs;
    doc["warmup_zeros"] = warmup_zeros;
    return doc.dump();
}

std::vector<int> input_gradient_sign(const LstmModel& model, std::span<const double> window,
                                     int label) {
    const ForwardCache cache = lstm_forward(model, window);
    const GradientBundle bundle = backward(model, cache, window, label);
    std::vector<int> signs(bundle.input_grad.size());
    for (std::size_t t = 0; t < signs.size(); ++t) {
        const double g = bundle.input_grad[t];
        signs[t] = g > 0.0 ? 1 : (g < 0.0 ? -1 : 0);
    }
    return signs;
}

NoiseSeries compute_noise(const LstmModel& model, const PowerTrace& trace,
                          const OccupancyLabels* labels, const NormParams& params,
                          const PerturbConfig& config) {
    validate(config);
    if (config.use_true_labels && (!labels || labels->size() != trace.size()))
        throw InvalidArgumentError("ground-truth labels requested but not aligned with trace");
    if (trace.has_missing()) throw InvalidArgumentError("perturbation requires a cleaned trace");

    const std::size_t n = trace.size();
    const std::size_t L = config.window_len;
    const double range = params.range();
    const std::vector<double> normalized = normalize_with(trace, params);

    NoiseSeries noise;
    noise.pair_period = config.pair_period;
    const std::size_t pair_count = (n + config.pair_period - 1) / config.pair_period;
    noise.values_w.assign(pair_count, 0.0);

    if (config.epsilon == 0.0 || range == 0.0) return noise;

    for (std::size_t k = 0; k < pair_count; ++k) {
        const std::size_t t = k * config.pair_period;
        if (t + 1 < L) {  // no full look-back window ends here yet
            ++noise.warmup_zeros;
            continue;
        }
        const std::span<const double> window(normalized.data() + (t + 1 - L), L);
        const ForwardCache cache = lstm_forward(model, window);
        const int label =
            config.use_true_labels ? labels->values[t] : (cache.prob >= 0.5 ? 1 : 0);
        const GradientBundle bundle = backward(model, cache, window, label);
        const double g = bundle.input_grad[L - 1];
        const int sign = g > 0.0 ? 1 : (g < 0.0 ? -1 : 0);

        double n_t = config.epsilon * static_cast<double>(sign) * range;
        if (config.gamma) {
            const double cap = *config.gamma * std::abs(trace.values_w[t]);
            n_t = std::clamp(n_t, -cap, cap);
        }
        noise.values_w[k] = n_t;
    }
    return noise;
}

PerturbedTrace apply_paired_perturbation(const PowerTrace& trace, const NoiseSeries& noise) {
    if (trace.has_missing()) throw InvalidArgumentError("perturbation requires a cleaned trace");
    const std::size_t n = trace.size();
    const std::size_t period = noise.pair_period;
    const std::size_t pair_count = (n + period - 1) / period;
    if (noise.values_w.size() != pair_count)
        throw InvalidArgumentError("noise series does not align with trace (" +
                                   std::to_string(noise.values_w.size()) + " vs " +
                                   std::to_string(pair_count) + " pairs)");

    PerturbedTrace out;
    out.trace = trace;
    out.applied_mask.assign(pair_count, 0);

    for (std::size_t k = 0; k < pair_count; ++k) {
        const std::size_t t = k * period;
        if (t + 1 >= n) break;  // trailing sample without a partner stays as is
        const double n_t = noise.values_w[k];
        const double lowered = trace.values_w[t] - n_t;
        const double raised = trace.values_w[t + 1] + n_t;
        if (trace.values_w[t] >= n_t && raised >= 0.0) {
            out.trace.values_w[t] = lowered;
            out.trace.values_w[t + 1] = raised;
            out.applied_mask[k] = 1;
        }
    }
    return out;
}

ObliviousResult generate_oblivious_trace(const LstmModel& model, const PowerTrace& trace,
                                         const OccupancyLabels* labels, const NormParams& params,
                                         const PerturbConfig& config) {
    validate(config);
    const NoiseSeries noise = compute_noise(model, trace, labels, params, config);

    ObliviousResult result;
    result.perturbed = apply_paired_perturbation(trace, noise);

    ConstraintReport& report = result.report;
    report.epsilon = config.epsilon;
    report.gamma = config.gamma;
    report.warmup_zeros = noise.warmup_zeros;

    const std::size_t n = trace.size();
    for (std::size_t k = 0; k < result.perturbed.applied_mask.size(); ++k) {
        const std::size_t t = k * noise.pair_period;
        if (t + 1 >= n) break;
        if (result.perturbed.applied_mask[k]) {
            ++report.applied_pairs;
            const double p_t = std::abs(trace.values_w[t]);
            const double n_k = std::abs(noise.values_w[k]);
            const double ratio =
                p_t > 0.0 ? n_k / p_t
                          : (n_k == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
            report.max_relative_perturbation = std::max(report.max_relative_perturbation, ratio);
            // compare in watt space: the clip makes |n| <= gamma*|P_t| exact,
            // while the ratio division can round one ulp past gamma
            if (config.gamma && n_k > *config.gamma * p_t) report.gamma_satisfied = false;
        } else {
            ++report.skipped_pairs;
        }
    }

    report.total_delta_w = result.perturbed.trace.total() - trace.total();

    // Fraction of stride-1 evaluation windows whose predicted label changes.
    const std::size_t L = config.window_len;
    if (n >= L) {
        const std::vector<double> norm_orig = normalize_with(trace, params);
        const std::vector<double> norm_pert = normalize_with(result.perturbed.trace, params);
        std::size_t flipped = 0;
        const std::size_t count = n - L + 1;
        for (std::size_t s = 0; s < count; ++s) {
            const std::span<const double> w_orig(norm_orig.data() + s, L);
            const std::span<const double> w_pert(norm_pert.data() + s, L);
            if (predict(model, w_orig).label != predict(model, w_pert).label) ++flipped;
        }
        report.flipped_fraction = static_cast<double>(flipped) / static_cast<double>(count);
    }
    return result;
}

}  // namespace amloda
