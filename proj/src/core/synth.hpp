#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "core/trace.hpp"

namespace amloda {

/// Deterministic synthetic household. A constant base load runs all day;
/// inside occupied intervals an appliance cycles on/off (seeded Markov
/// dwell times) adding appliance_burst_w; an occupancy-independent
/// background load (fridge/heater style) of background_spike_w cycles at
/// all hours. Labels are 1 exactly inside the occupied intervals.
///
/// background_spike_w exists so the meter's full dynamic range can dwarf
/// the occupancy signature, matching real traces where large cycling
/// appliances set the range while occupancy cues are subtle.
struct SynthConfig {
    int day_count = 1;
    double base_load_w = 100.0;
    double appliance_burst_w = 500.0;
    double background_spike_w = 0.0;
    double noise_std_w = 5.0;
    double sample_period_s = 1.0;  // integer seconds, must divide 86400
    std::vector<std::pair<int, int>> occupied_intervals;  // [start,end) seconds of day
    std::uint64_t seed = 1;
};

struct SynthResult {
    PowerTrace trace;
    OccupancyLabels labels;
};

SynthResult synth_household(const SynthConfig& config);

/// Parses "HH:MM" or "HH:MM:SS" to seconds of day.
int parse_clock_time(const std::string& text);

}  // namespace amloda
