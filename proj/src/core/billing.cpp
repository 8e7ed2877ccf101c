#include "core/billing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "core/errors.hpp"

namespace amloda {

namespace {

void validate(const TouSchedule& s) {
    if (s.frames.empty()) throw InvalidArgumentError("TOU schedule has no frames");
    for (const auto& f : s.frames) {
        if (f.len < 1) throw InvalidArgumentError("TOU frame length must be >= 1");
        if (f.rate < 0) throw InvalidArgumentError("TOU rate must be >= 0");
    }
}

void validate(const PlpSchedule& s) {
    if (s.frame_len < 1) throw InvalidArgumentError("PLP frame length must be >= 1");
    if (s.rates.size() != s.thresholds.size() + 1)
        throw InvalidArgumentError("PLP needs thresholds.size()+1 rates");
    for (double r : s.rates)
        if (r < 0) throw InvalidArgumentError("PLP rate must be >= 0");
    for (std::size_t i = 0; i + 1 < s.thresholds.size(); ++i)
        if (!(s.thresholds[i] < s.thresholds[i + 1]))
            throw InvalidArgumentError("PLP thresholds must be strictly increasing");
}

}  // namespace

std::size_t TouSchedule::period_samples() const {
    std::size_t total = 0;
    for (const auto& f : frames) total += f.len;
    return total;
}

std::vector<double> frame_consumption(std::span<const double> values, std::size_t frame_len,
                                      bool pad_zero) {
    if (frame_len < 1) throw InvalidArgumentError("frame length must be >= 1");
    if (values.empty()) throw InvalidArgumentError("empty trace");
    if (values.size() % frame_len != 0 && !pad_zero)
        throw DataError("trace length " + std::to_string(values.size()) +
                        " not divisible by frame length " + std::to_string(frame_len) +
                        " (use pad-zero to zero-fill)");
    const std::size_t n_frames = (values.size() + frame_len - 1) / frame_len;
    std::vector<double> frames(n_frames, 0.0);
    for (std::size_t i = 0; i < values.size(); ++i) frames[i / frame_len] += values[i];
    return frames;
}

TouSchedule tile_tou(const TouSchedule& schedule, std::size_t n_samples, bool pad_zero) {
    validate(schedule);
    const std::size_t period = schedule.period_samples();
    if (n_samples % period != 0 && !pad_zero)
        throw DataError("trace length " + std::to_string(n_samples) +
                        " not divisible by TOU schedule period " + std::to_string(period) +
                        " (use pad-zero to zero-fill)");
    const std::size_t repeats = (n_samples + period - 1) / period;
    TouSchedule tiled;
    tiled.frames.reserve(repeats * schedule.frames.size());
    for (std::size_t r = 0; r < repeats; ++r)
        tiled.frames.insert(tiled.frames.end(), schedule.frames.begin(), schedule.frames.end());
    return tiled;
}

std::vector<double> tou_frame_consumption(std::span<const double> values,
                                          const TouSchedule& schedule) {
    validate(schedule);
    if (schedule.period_samples() < values.size())
        throw InvalidArgumentError("TOU schedule shorter than trace; tile it first");
    std::vector<double> frames(schedule.frames.size(), 0.0);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < frames.size() && pos < values.size(); ++i) {
        const std::size_t end = std::min(values.size(), pos + schedule.frames[i].len);
        double sum = 0.0;
        for (std::size_t k = pos; k < end; ++k) sum += values[k];
        frames[i] = sum;
        pos += schedule.frames[i].len;
    }
    return frames;
}

double tou_bill(const std::vector<double>& frames, const TouSchedule& schedule) {
    validate(schedule);
    if (frames.size() != schedule.frames.size())
        throw InvalidArgumentError("frame count " + std::to_string(frames.size()) +
                                   " does not match schedule (" +
                                   std::to_string(schedule.frames.size()) + ")");
    double bill = 0.0;
    for (std::size_t i = 0; i < frames.size(); ++i) bill += schedule.frames[i].rate * frames[i];
    return bill;
}

std::size_t plp_bucket(const PlpSchedule& schedule, double m) {
    // first threshold strictly greater than m; a total equal to a threshold
    // lands in the higher bucket
    return static_cast<std::size_t>(
        std::upper_bound(schedule.thresholds.begin(), schedule.thresholds.end(), m) -
        schedule.thresholds.begin());
}

double plp_bill(const std::vector<double>& frames, const PlpSchedule& schedule) {
    validate(schedule);
    if (frames.empty()) throw InvalidArgumentError("no frames to bill");
    double bill = 0.0;
    for (double m : frames) bill += m * schedule.rates[plp_bucket(schedule, m)];
    return bill;
}

double bill_trace(const Tariff& tariff, const PowerTrace& trace, bool pad_zero) {
    if (trace.has_missing()) throw InvalidArgumentError("billing requires a cleaned trace");
    if (const auto* tou = std::get_if<TouSchedule>(&tariff)) {
        const TouSchedule tiled = tile_tou(*tou, trace.size(), pad_zero);
        return tou_bill(tou_frame_consumption(trace.values_w, tiled), tiled);
    }
    const auto& plp = std::get<PlpSchedule>(tariff);
    return plp_bill(frame_consumption(trace.values_w, plp.frame_len, pad_zero), plp);
}

std::string InvarianceReport::to_json() const {
    nlohmann::json doc;
    doc["bill_original"] = bill_original;
    doc["bill_perturbed"] = bill_perturbed;
    doc["delta"] = delta;
    doc["invariant"] = invariant;
    return doc.dump();
}

InvarianceReport billing_invariance_check(const PowerTrace& original, const PowerTrace& perturbed,
                                          const Tariff& tariff, bool pad_zero) {
    if (original.size() != perturbed.size())
        throw InvalidArgumentError("original and perturbed traces differ in length");
    InvarianceReport report;
    report.bill_original = bill_trace(tariff, original, pad_zero);
    report.bill_perturbed = bill_trace(tariff, perturbed, pad_zero);
    report.delta = report.bill_perturbed - report.bill_original;
    const double denom = std::max(std::abs(report.bill_original), std::abs(report.bill_perturbed));
    report.invariant = denom == 0.0 ? report.delta == 0.0 : std::abs(report.delta) <= 1e-9 * denom;
    return report;
}

Tariff tariff_from_json(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad tariff JSON: ") + e.what());
    }
    try {
        const std::string type = doc.at("type").get<std::string>();
        if (type == "tou") {
            TouSchedule s;
            for (const auto& f : doc.at("frames"))
                s.frames.push_back({f.at("len").get<std::size_t>(), f.at("rate").get<double>()});
            validate(s);
            return s;
        }
        if (type == "plp") {
            PlpSchedule s;
            s.frame_len = doc.at("frame_len").get<std::size_t>();
            s.thresholds = doc.at("thresholds").get<std::vector<double>>();
            s.rates = doc.at("rates").get<std::vector<double>>();
            validate(s);
            return s;
        }
        throw ParseError("tariff type must be \"tou\" or \"plp\", got \"" + type + "\"");
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("tariff JSON missing fields: ") + e.what());
    }
}

Tariff load_tariff(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open tariff file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return tariff_from_json(buf.str());
}

}  // namespace amloda
