#include "core/gaussian.hpp"

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "core/errors.hpp"

namespace amloda {

std::string GaussianReport::to_json() const {
    nlohmann::json doc;
    doc["sigma2"] = sigma2;
    doc["seed"] = seed;
    doc["floored_count"] = floored_count;
    doc["total_delta_w"] = total_delta_w;
    return doc.dump();
}

GaussianResult gaussian_perturb(const PowerTrace& trace, const GaussianConfig& config) {
    if (trace.size() == 0) throw InvalidArgumentError("empty trace");
    if (!(config.sigma2 > 0)) throw InvalidArgumentError("sigma2 must be > 0");
    if (trace.has_missing()) throw InvalidArgumentError("perturbation requires a cleaned trace");

    GaussianResult result;
    result.perturbed.trace = trace;
    result.perturbed.applied_mask.assign(trace.size(), 0);
    result.report.sigma2 = config.sigma2;
    result.report.seed = config.seed;

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> noise(0.0, std::sqrt(config.sigma2));
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const double v = trace.values_w[i] + noise(rng);
        if (v < 0.0) {
            result.perturbed.trace.values_w[i] = 0.0;
            result.perturbed.applied_mask[i] = 1;
            ++result.report.floored_count;
        } else {
            result.perturbed.trace.values_w[i] = v;
        }
    }
    result.report.total_delta_w = result.perturbed.trace.total() - trace.total();
    return result;
}

double match_distortion(const PerturbedTrace& perturbed, const PowerTrace& original) {
    if (perturbed.trace.size() != original.size())
        throw InvalidArgumentError("traces differ in length");
    if (original.size() == 0) throw InvalidArgumentError("empty trace");
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < original.size(); ++i) {
        const double d = perturbed.trace.values_w[i] - original.values_w[i];
        sum_sq += d * d;
    }
    return sum_sq / static_cast<double>(original.size());
}

}  // namespace amloda
