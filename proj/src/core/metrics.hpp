#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

namespace amloda {

struct ConfusionMatrix {
    std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;

    std::uint64_t total() const { return tp + tn + fp + fn; }
};

/// Ratio metrics; a field is empty when its denominator is zero.
struct BasicMetrics {
    std::optional<double> accuracy, precision, recall, f1, fpr, fnr;
};

struct MccResult {
    double value = 0.0;
    bool degenerate = false;  // a zero denominator factor forced the 0 convention
};

/// Full attack-evaluation report.
struct EvalReport {
    ConfusionMatrix counts;
    BasicMetrics basic;
    MccResult mcc;
    std::optional<double> auc;  // empty when only one class is present

    std::string to_json() const;
    /// Aligned single-row text table (Accuracy..AUC columns).
    std::string to_table() const;
};

/// Positive class = occupied (1).
ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels);

BasicMetrics basic_metrics(const ConfusionMatrix& cm);

/// Matthews correlation coefficient; 0 (flagged) when any denominator
/// factor vanishes.
MccResult mcc(const ConfusionMatrix& cm);

/// Trapezoidal area under the ROC curve over all distinct score
/// thresholds; ties contribute half. Throws DataError when labels are
/// single-class.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

EvalReport evaluate(std::span<const double> scores, std::span<const int> predictions,
                    std::span<const int> labels);

}  // namespace amloda
