#include "core/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "core/errors.hpp"

namespace amloda {

namespace {

constexpr int kSecondsPerDay = 86400;

// Appliance dwell behaviour: geometric on/off runs, roughly 60% duty.
constexpr double kApplianceStayOn = 0.92;
constexpr double kApplianceStayOff = 0.88;
// Background load fires rarely (a few runs per day) but tall, so it sets
// the meter's dynamic range without drowning the occupancy cue.
constexpr double kBackgroundStart = 0.002;
constexpr double kBackgroundStayOn = 0.85;

void validate(const SynthConfig& c) {
    if (c.day_count < 1) throw InvalidArgumentError("day_count must be >= 1");
    if (c.base_load_w < 0 || c.appliance_burst_w < 0 || c.background_spike_w < 0 ||
        c.noise_std_w < 0)
        throw InvalidArgumentError("wattages must be >= 0");
    if (c.sample_period_s < 1 || c.sample_period_s != std::floor(c.sample_period_s) ||
        kSecondsPerDay % static_cast<int>(c.sample_period_s) != 0)
        throw InvalidArgumentError("sample_period_s must be an integer divisor of 86400");
    auto intervals = c.occupied_intervals;
    std::sort(intervals.begin(), intervals.end());
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        auto [start, end] = intervals[i];
        if (start < 0 || end > kSecondsPerDay || start >= end)
            throw InvalidArgumentError("occupied interval out of range or empty");
        if (i > 0 && intervals[i - 1].second > start)
            throw DataError("overlapping occupied intervals");
    }
}

}  // namespace

int parse_clock_time(const std::string& text) {
    int h = 0, m = 0, s = 0;
    char c1 = 0, c2 = 0;
    int n = std::sscanf(text.c_str(), "%d%c%d%c%d", &h, &c1, &m, &c2, &s);
    if ((n != 3 && n != 5) || c1 != ':' || (n == 5 && c2 != ':') || h < 0 || h > 24 || m < 0 ||
        m > 59 || s < 0 || s > 59)
        throw ParseError("bad clock time '" + text + "' (expected HH:MM[:SS])");
    int sod = h * 3600 + m * 60 + s;
    if (sod > kSecondsPerDay) throw ParseError("clock time past 24:00");
    return sod;
}

SynthResult synth_household(const SynthConfig& config) {
    validate(config);

    auto intervals = config.occupied_intervals;
    std::sort(intervals.begin(), intervals.end());

    const int period = static_cast<int>(config.sample_period_s);
    const std::size_t per_day = static_cast<std::size_t>(kSecondsPerDay / period);
    const std::size_t total = per_day * static_cast<std::size_t>(config.day_count);

    SynthResult out;
    out.trace.start_time = 0;
    out.trace.sample_period_s = config.sample_period_s;
    out.trace.values_w.resize(total);
    out.labels.values.resize(total);

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> sensor_noise(0.0, config.noise_std_w);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    bool appliance_on = false;
    bool in_interval_prev = false;
    bool background_on = false;

    for (std::size_t n = 0; n < total; ++n) {
        const int sod = static_cast<int>((n % per_day)) * period;
        bool occupied = false;
        for (const auto& [start, end] : intervals) {
            if (sod >= start && sod < end) {
                occupied = true;
                break;
            }
        }

        double watts = config.base_load_w;
        if (config.noise_std_w > 0) watts += sensor_noise(rng);

        if (occupied) {
            if (!in_interval_prev) appliance_on = true;  // appliance kicks in on arrival
            const double u = unit(rng);
            if (appliance_on ? u > kApplianceStayOn : u > kApplianceStayOff)
                appliance_on = !appliance_on;
            if (appliance_on) watts += config.appliance_burst_w;
        } else {
            appliance_on = false;
        }
        in_interval_prev = occupied;

        if (config.background_spike_w > 0) {
            const double u = unit(rng);
            background_on = background_on ? u < kBackgroundStayOn : u < kBackgroundStart;
            if (background_on) watts += config.background_spike_w;
        }

        out.trace.values_w[n] = std::max(0.0, watts);
        out.labels.values[n] = occupied ? 1 : 0;
    }
    return out;
}

}  // namespace amloda
