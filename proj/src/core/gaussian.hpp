#pragma once

#include <cstdint>
#include <string>

#include "core/perturb.hpp"
#include "core/trace.hpp"

namespace amloda {

struct GaussianConfig {
    double sigma2 = 1.0;  // variance in watt^2
    std::uint64_t seed = 1;
};

struct GaussianReport {
    double sigma2 = 0.0;
    std::uint64_t seed = 0;
    std::size_t floored_count = 0;  // samples pushed negative and clamped to 0
    double total_delta_w = 0.0;

    std::string to_json() const;
};

struct GaussianResult {
    PerturbedTrace perturbed;  // applied_mask flags floored samples here
    GaussianReport report;
};

/// Adds an independent zero-mean Gaussian draw to every sample, flooring
/// at 0 W. Deterministic for a fixed seed.
GaussianResult gaussian_perturb(const PowerTrace& trace, const GaussianConfig& config);

/// Mean squared deviation between a perturbed trace and its original, i.e.
/// the variance a Gaussian baseline needs for equal L2 distortion.
double match_distortion(const PerturbedTrace& perturbed, const PowerTrace& original);

}  // namespace amloda
