#include "core/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/errors.hpp"

namespace amloda {

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size())
        throw InvalidArgumentError("predictions and labels differ in length");
    if (predictions.empty()) throw InvalidArgumentError("nothing to evaluate");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const int p = predictions[i], y = labels[i];
        if ((p != 0 && p != 1) || (y != 0 && y != 1))
            throw InvalidArgumentError("predictions and labels must be 0 or 1");
        if (y == 1)
            (p == 1 ? cm.tp : cm.fn)++;
        else
            (p == 1 ? cm.fp : cm.tn)++;
    }
    return cm;
}

BasicMetrics basic_metrics(const ConfusionMatrix& cm) {
    auto ratio = [](std::uint64_t num, std::uint64_t den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    BasicMetrics m;
    m.accuracy = ratio(cm.tp + cm.tn, cm.total());
    m.precision = ratio(cm.tp, cm.tp + cm.fp);
    m.recall = ratio(cm.tp, cm.tp + cm.fn);
    if (m.precision && m.recall && (*m.precision + *m.recall) > 0.0)
        m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
    m.fpr = ratio(cm.fp, cm.fp + cm.tn);
    m.fnr = ratio(cm.fn, cm.fn + cm.tp);
    return m;
}

MccResult mcc(const ConfusionMatrix& cm) {
    const double tp = static_cast<double>(cm.tp), tn = static_cast<double>(cm.tn);
    const double fp = static_cast<double>(cm.fp), fn = static_cast<double>(cm.fn);
    const double f1 = tp + fp, f2 = tp + fn, f3 = tn + fp, f4 = tn + fn;
    if (f1 == 0 || f2 == 0 || f3 == 0 || f4 == 0) return {0.0, true};
    const double denom = std::sqrt(f1) * std::sqrt(f2) * std::sqrt(f3) * std::sqrt(f4);
    return {(tp * tn - fp * fn) / denom, false};
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        throw InvalidArgumentError("scores and labels differ in length");
    if (scores.empty()) throw InvalidArgumentError("nothing to evaluate");

    std::uint64_t pos = 0, neg = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw InvalidArgumentError("labels must be 0 or 1");
        (y == 1 ? pos : neg)++;
    }
    if (pos == 0 || neg == 0) throw DataError("AUC undefined: labels are single-class");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    // Sweep thresholds from +inf downward; tied scores advance the curve in
    // one step so ties contribute the trapezoid's half weight.
    double auc = 0.0;
    double tpr_prev = 0.0, fpr_prev = 0.0;
    std::uint64_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] == 1 ? tp : fp)++;
            ++i;
        }
        const double tpr = static_cast<double>(tp) / static_cast<double>(pos);
        const double fpr = static_cast<double>(fp) / static_cast<double>(neg);
        auc += (fpr - fpr_prev) * (tpr + tpr_prev) / 2.0;
        tpr_prev = tpr;
        fpr_prev = fpr;
    }
    return auc;
}

EvalReport evaluate(std::span<const double> scores, std::span<const int> predictions,
                    std::span<const int> labels) {
    EvalReport report;
    report.counts = confusion(predictions, labels);
    report.basic = basic_metrics(report.counts);
    report.mcc = mcc(report.counts);
    try {
        report.auc = roc_auc(scores, labels);
    } catch (const DataError&) {
        report.auc = std::nullopt;
    }
    return report;
}

std::string EvalReport::to_json() const {
    nlohmann::json doc;
    std::vector<std::string> undefined;
    auto put = [&](const char* name, const std::optional<double>& v) {
        if (v)
            doc[name] = *v;
        else {
            doc[name] = nullptr;
            undefined.push_back(name);
        }
    };
    put("accuracy", basic.accuracy);
    put("precision", basic.precision);
    put("recall", basic.recall);
    put("f1", basic.f1);
    put("fpr", basic.fpr);
    put("fnr", basic.fnr);
    doc["mcc"] = mcc.value;
    if (mcc.degenerate) undefined.push_back("mcc");
    put("auc", auc);
    doc["counts"] = {{"tp", counts.tp}, {"tn", counts.tn}, {"fp", counts.fp}, {"fn", counts.fn}};
    doc["undefined"] = undefined;
    return doc.dump();
}

std::string EvalReport::to_table() const {
    auto cell = [](const std::optional<double>& v) {
        char buf[24];
        if (v)
            std::snprintf(buf, sizeof(buf), "%-11.4f", *v);
        else
            std::snprintf(buf, sizeof(buf), "%-11s", "n/a");
        return std::string(buf);
    };
    std::string out;
    const char* names[] = {"Accuracy", "Precision", "Recall", "F1", "FPR", "FNR", "MCC", "AUC"};
    for (const char* n : names) {
        char buf[24];
        std::snprintf(buf, sizeof(buf), "%-11s", n);
        out += buf;
    }
    out += '\n';
    out += cell(basic.accuracy) + cell(basic.precision) + cell(basic.recall) + cell(basic.f1) +
           cell(basic.fpr) + cell(basic.fnr) +
           cell(mcc.degenerate ? std::optional<double>{} : std::optional<double>{mcc.value}) +
           cell(auc);
    out += '\n';
    return out;
}

}  // namespace amloda
