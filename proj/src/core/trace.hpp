#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace amloda {

/// Uniformly sampled power readings in watts. Missing samples (gaps or
/// sentinel values in the source file) are carried as NaN until
/// clean_missing() strips them; every numeric sample is >= 0.
struct PowerTrace {
    std::int64_t start_time = 0;   // UTC epoch seconds of the first sample
    double sample_period_s = 1.0;  // seconds between samples
    std::vector<double> values_w;  // watts; NaN marks a missing sample

    std::size_t size() const { return values_w.size(); }
    bool has_missing() const;
    /// Sum of all samples in watt-samples. Throws NumericError on NaN.
    double total() const;
};

/// Per-timestep binary occupancy ground truth, aligned 1:1 with a PowerTrace.
struct OccupancyLabels {
    std::vector<std::uint8_t> values;  // each 0 or 1

    std::size_t size() const { return values.size(); }
};

/// Affine map recorded by normalize() so perturbations computed in
/// normalized units can be converted back to watts.
struct NormParams {
    double min_w = 0.0;
    double max_w = 0.0;

    double range() const { return max_w - min_w; }
};

/// Fixed-length look-back windows over a normalized sequence. The label of a
/// window is the label of its final sample: the classifier predicts
/// "occupied now given the last L samples".
class WindowedDataset {
public:
    WindowedDataset() = default;
    WindowedDataset(std::vector<double> series, std::vector<std::size_t> starts,
                    std::vector<std::uint8_t> labels, std::size_t window_len);

    std::size_t size() const { return starts_.size(); }
    std::size_t window_len() const { return window_len_; }
    std::span<const double> window(std::size_t i) const;
    int label(std::size_t i) const { return labels_[i]; }
    std::size_t start(std::size_t i) const { return starts_[i]; }
    const std::vector<std::uint8_t>& labels() const { return labels_; }
    std::span<const double> series() const { return series_; }

private:
    std::vector<double> series_;         // shared backing sequence
    std::vector<std::size_t> starts_;    // window i covers [starts_[i], starts_[i]+L)
    std::vector<std::uint8_t> labels_;   // label of the window's final sample
    std::size_t window_len_ = 0;
};

struct CleaningReport {
    std::vector<std::size_t> removed;  // indices dropped from the source trace

    std::string to_json() const;  // {"removed":[...]}
};

struct CleanResult {
    PowerTrace trace;
    OccupancyLabels labels;  // empty when the input had no labels
    CleaningReport report;
};

struct LoadResult {
    PowerTrace trace;
    OccupancyLabels labels;  // empty when the file has no occupancy column
    bool has_labels = false;
};

/// Reads the canonical trace CSV: header `timestamp,power_w[,occupied]`,
/// timestamps ISO-8601 (UTC) or integer epoch seconds, missing power as an
/// empty field or -1. Rows must be strictly increasing in time.
LoadResult load_eco_csv(const std::string& path);

/// Writes the canonical CSV with epoch-second timestamps. NaN samples are
/// written as empty power fields.
void save_trace_csv(const PowerTrace& trace, const OccupancyLabels* labels,
                    const std::string& path);

/// Drops missing samples (and the same indices from the labels, keeping
/// alignment). Throws DataError if nothing survives.
CleanResult clean_missing(const PowerTrace& trace, const OccupancyLabels* labels);

/// Maps values to [0,1] via (v - min)/(max - min). A constant trace maps to
/// all zeros with min_w == max_w recorded.
std::pair<std::vector<double>, NormParams> normalize(const PowerTrace& trace);

/// Applies an existing NormParams to a trace (used when scoring perturbed
/// traces against a model trained on the original normalization). Outputs
/// may fall outside [0,1] when the trace exceeds the recorded range.
std::vector<double> normalize_with(const PowerTrace& trace, const NormParams& params);

/// Inverse of normalize; round-trips within 1e-9 relative.
std::vector<double> denormalize(std::span<const double> values, const NormParams& params);

/// Window i covers samples [i*stride, i*stride + window_len).
WindowedDataset make_windows(std::span<const double> values, const OccupancyLabels& labels,
                             std::size_t window_len, std::size_t stride);

/// Chronological split: first floor(N*f) windows train, remainder test.
std::pair<WindowedDataset, WindowedDataset> split_train_test(const WindowedDataset& dataset,
                                                             double train_fraction);

/// Parses "YYYY-MM-DDTHH:MM:SS[Z]" (UTC) or plain integer epoch seconds.
std::int64_t parse_timestamp(const std::string& text);

}  // namespace amloda
