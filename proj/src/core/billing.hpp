#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "core/trace.hpp"

namespace amloda {

/// Time-of-use tariff: consecutive frames, each with its own length in
/// samples and rate in currency per watt-sample. A daily schedule tiles
/// over longer traces.
struct TouSchedule {
    struct Frame {
        std::size_t len = 0;
        double rate = 0.0;
    };
    std::vector<Frame> frames;

    std::size_t period_samples() const;
};

/// Peak-load pricing: uniform frames; each frame's total consumption picks
/// a rate from a threshold ladder. A frame total equal to a threshold
/// falls into the higher bucket.
struct PlpSchedule {
    std::size_t frame_len = 0;
    std::vector<double> thresholds;  // strictly increasing, watt-samples
    std::vector<double> rates;       // thresholds.size() + 1 entries
};

using Tariff = std::variant<TouSchedule, PlpSchedule>;

/// Per-frame consumption totals m_i in watt-samples, uniform frame length.
/// The trace length must divide evenly unless pad_zero fills the tail.
std::vector<double> frame_consumption(std::span<const double> values, std::size_t frame_len,
                                      bool pad_zero = false);

/// Repeats a TOU schedule end to end until it covers n_samples. Without
/// pad_zero the schedule period must divide the trace exactly; with it the
/// tail is treated as zero-consumption samples.
TouSchedule tile_tou(const TouSchedule& schedule, std::size_t n_samples, bool pad_zero = false);

/// Consumption per TOU frame; frames follow the schedule's lengths, and
/// samples past the end of the trace count as zero.
std::vector<double> tou_frame_consumption(std::span<const double> values,
                                          const TouSchedule& schedule);

/// Sum of rate_i * m_i; frame counts must match.
double tou_bill(const std::vector<double>& frames, const TouSchedule& schedule);

/// Each frame billed m_i * rate(bucket of m_i).
double plp_bill(const std::vector<double>& frames, const PlpSchedule& schedule);

/// Bucket index for a frame total (count of thresholds <= m).
std::size_t plp_bucket(const PlpSchedule& schedule, double m);

/// Bills a whole trace under either tariff (tiling TOU as needed).
double bill_trace(const Tariff& tariff, const PowerTrace& trace, bool pad_zero = false);

struct InvarianceReport {
    double bill_original = 0.0;
    double bill_perturbed = 0.0;
    double delta = 0.0;
    bool invariant = false;  // |delta| <= 1e-9 relative to the larger bill

    std::string to_json() const;
};

InvarianceReport billing_invariance_check(const PowerTrace& original, const PowerTrace& perturbed,
                                          const Tariff& tariff, bool pad_zero = false);

/// Tariff JSON: {"type":"tou","frames":[{"len":N,"rate":r},...]} or
/// {"type":"plp","frame_len":N,"thresholds":[...],"rates":[...]}.
Tariff tariff_from_json(const std::string& json_text);
Tariff load_tariff(const std::string& path);

}  // namespace amloda
