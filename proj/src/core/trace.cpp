#include "core/trace.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include "core/errors.hpp"

namespace amloda {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

bool parse_double(std::string_view text, double& out) {
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

bool parse_int64(std::string_view text, std::int64_t& out) {
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// Days since 1970-01-01 for a proleptic Gregorian date (Howard Hinnant's
// days_from_civil).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw NumericError("unformattable value");
    return std::string(buf, ptr);
}

}  // namespace

bool PowerTrace::has_missing() const {
    return std::any_of(values_w.begin(), values_w.end(), [](double v) { return std::isnan(v); });
}

double PowerTrace::total() const {
    double sum = 0.0;
    for (double v : values_w) {
        if (std::isnan(v)) throw NumericError("trace total over missing samples");
        sum += v;
    }
    return sum;
}

WindowedDataset::WindowedDataset(std::vector<double> series, std::vector<std::size_t> starts,
                                 std::vector<std::uint8_t> labels, std::size_t window_len)
    : series_(std::move(series)),
      starts_(std::move(starts)),
      labels_(std::move(labels)),
      window_len_(window_len) {
    if (starts_.size() != labels_.size())
        throw InvalidArgumentError("window starts and labels differ in count");
    for (std::size_t s : starts_)
        if (s + window_len_ > series_.size())
            throw InvalidArgumentError("window exceeds backing sequence");
}

std::span<const double> WindowedDataset::window(std::size_t i) const {
    return std::span<const double>(series_.data() + starts_[i], window_len_);
}

std::string CleaningReport::to_json() const {
    std::string out = "{\"removed\":[";
    for (std::size_t i = 0; i < removed.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(removed[i]);
    }
    out += "]}";
    return out;
}

std::int64_t parse_timestamp(const std::string& text) {
    std::string_view s = trim(text);
    std::int64_t epoch = 0;
    if (parse_int64(s, epoch)) return epoch;
    // ISO-8601: YYYY-MM-DDTHH:MM:SS with optional trailing Z; space accepted
    // in place of T.
    if (s.size() >= 19 && s[4] == '-' && s[7] == '-' && (s[10] == 'T' || s[10] == ' ') &&
        s[13] == ':' && s[16] == ':') {
        std::string_view rest = s.substr(19);
        if (rest.empty() || rest == "Z") {
            std::int64_t y;
            std::int64_t mo, d, h, mi, sec;
            if (parse_int64(s.substr(0, 4), y) && parse_int64(s.substr(5, 2), mo) &&
                parse_int64(s.substr(8, 2), d) && parse_int64(s.substr(11, 2), h) &&
                parse_int64(s.substr(14, 2), mi) && parse_int64(s.substr(17, 2), sec) &&
                mo >= 1 && mo <= 12 && d >= 1 && d <= 31 && h < 24 && mi < 60 && sec < 61) {
                return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 +
                       h * 3600 + mi * 60 + sec;
            }
        }
    }
    throw ParseError("unparseable timestamp '" + std::string(s) + "'");
}

LoadResult load_eco_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trace file: " + path);

    LoadResult result;
    std::string line;
    std::size_t row = 0;
    bool first_data_row = true;
    std::int64_t prev_ts = 0;
    std::int64_t second_ts = 0;
    bool have_second = false;

    while (std::getline(in, line)) {
        ++row;
        std::string_view sv = trim(line);
        if (sv.empty()) continue;
        if (row == 1 && sv.substr(0, 9) == "timestamp") continue;  // header

        // split on commas into at most 3 fields
        std::array<std::string_view, 3> fields;
        std::size_t nfields = 0;
        std::size_t pos = 0;
        while (nfields < 3) {
            std::size_t comma = sv.find(',', pos);
            if (comma == std::string_view::npos) {
                fields[nfields++] = trim(sv.substr(pos));
                break;
            }
            fields[nfields++] = trim(sv.substr(pos, comma - pos));
            pos = comma + 1;
        }
        if (nfields < 2)
            throw ParseError("row " + std::to_string(row) + ": expected timestamp,power_w[,occupied]");

        std::int64_t ts;
        try {
            ts = parse_timestamp(std::string(fields[0]));
        } catch (const ParseError&) {
            throw ParseError("row " + std::to_string(row) + ": bad timestamp '" + std::string(fields[0]) + "'");
        }

        double power;
        if (fields[1].empty()) {
            power = kMissing;
        } else if (!parse_double(fields[1], power)) {
            throw ParseError("row " + std::to_string(row) + ": bad power value '" + std::string(fields[1]) + "'");
        } else if (power == -1.0) {
            power = kMissing;  // sentinel for missing
        } else if (power < 0.0) {
            throw ParseError("row " + std::to_string(row) + ": negative power " + std::string(fields[1]));
        }

        if (nfields == 3) {
            std::int64_t occ;
            if (!parse_int64(fields[2], occ) || (occ != 0 && occ != 1))
                throw ParseError("row " + std::to_string(row) + ": occupied must be 0 or 1");
            result.labels.values.push_back(static_cast<std::uint8_t>(occ));
            result.has_labels = true;
        } else if (result.has_labels) {
            throw ParseError("row " + std::to_string(row) + ": occupied column missing after earlier rows had it");
        }

        if (first_data_row) {
            result.trace.start_time = ts;
            first_data_row = false;
        } else {
            if (ts <= prev_ts)
                throw DataError("row " + std::to_string(row) + ": timestamps not strictly increasing");
            if (!have_second) {
                second_ts = ts;
                have_second = true;
            }
        }
        prev_ts = ts;
        result.trace.values_w.push_back(power);
    }

    if (result.trace.values_w.empty()) throw DataError("no samples in " + path);
    result.trace.sample_period_s =
        have_second ? static_cast<double>(second_ts - result.trace.start_time) : 1.0;
    if (result.has_labels && result.labels.size() != result.trace.size())
        throw ParseError("occupied column present on only some rows");
    return result;
}

void save_trace_csv(const PowerTrace& trace, const OccupancyLabels* labels,
                    const std::string& path) {
    if (labels && labels->size() != trace.size())
        throw InvalidArgumentError("labels length does not match trace");
    std::ofstream out(path, std::ios::binary);  // binary: no platform newline translation
    if (!out) throw IoError("cannot write trace file: " + path);
    out << (labels ? "timestamp,power_w,occupied\n" : "timestamp,power_w\n");
    const std::int64_t period = static_cast<std::int64_t>(trace.sample_period_s);
    for (std::size_t i = 0; i < trace.size(); ++i) {
        out << (trace.start_time + static_cast<std::int64_t>(i) * period) << ',';
        if (!std::isnan(trace.values_w[i])) out << format_double(trace.values_w[i]);
        if (labels) out << ',' << static_cast<int>(labels->values[i]);
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

CleanResult clean_missing(const PowerTrace& trace, const OccupancyLabels* labels) {
    if (labels && labels->size() != trace.size())
        throw InvalidArgumentError("labels length does not match trace");
    CleanResult result;
    result.trace.start_time = trace.start_time;
    result.trace.sample_period_s = trace.sample_period_s;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        if (std::isnan(trace.values_w[i])) {
            result.report.removed.push_back(i);
        } else {
            result.trace.values_w.push_back(trace.values_w[i]);
            if (labels) result.labels.values.push_back(labels->values[i]);
        }
    }
    if (result.trace.values_w.empty()) throw DataError("empty after cleaning");
    return result;
}

std::pair<std::vector<double>, NormParams> normalize(const PowerTrace& trace) {
    if (trace.values_w.empty()) throw InvalidArgumentError("normalize on empty trace");
    if (trace.has_missing()) throw InvalidArgumentError("normalize on trace with missing samples");
    NormParams params;
    params.min_w = *std::min_element(trace.values_w.begin(), trace.values_w.end());
    params.max_w = *std::max_element(trace.values_w.begin(), trace.values_w.end());
    return {normalize_with(trace, params), params};
}

std::vector<double> normalize_with(const PowerTrace& trace, const NormParams& params) {
    const double range = params.range();
    std::vector<double> out(trace.size());
    if (range == 0.0) {
        std::fill(out.begin(), out.end(), 0.0);
        return out;
    }
    for (std::size_t i = 0; i < trace.size(); ++i)
        out[i] = (trace.values_w[i] - params.min_w) / range;
    return out;
}

std::vector<double> denormalize(std::span<const double> values, const NormParams& params) {
    std::vector<double> out(values.size());
    const double range = params.range();
    for (std::size_t i = 0; i < values.size(); ++i)
        out[i] = values[i] * range + params.min_w;
    return out;
}

WindowedDataset make_windows(std::span<const double> values, const OccupancyLabels& labels,
                             std::size_t window_len, std::size_t stride) {
    if (window_len < 1 || stride < 1) throw InvalidArgumentError("window_len and stride must be >= 1");
    if (labels.size() != values.size())
        throw InvalidArgumentError("labels length does not match sequence");
    if (values.size() < window_len)
        throw DataError("sequence shorter than window length");

    const std::size_t count = (values.size() - window_len) / stride + 1;
    std::vector<std::size_t> starts(count);
    std::vector<std::uint8_t> window_labels(count);
    for (std::size_t i = 0; i < count; ++i) {
        starts[i] = i * stride;
        window_labels[i] = labels.values[starts[i] + window_len - 1];
    }
    return WindowedDataset(std::vector<double>(values.begin(), values.end()), std::move(starts),
                           std::move(window_labels), window_len);
}

std::pair<WindowedDataset, WindowedDataset> split_train_test(const WindowedDataset& dataset,
                                                             double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw InvalidArgumentError("train_fraction must be in (0,1)");
    const std::size_t n = dataset.size();
    const std::size_t n_train = static_cast<std::size_t>(static_cast<double>(n) * train_fraction);
    if (n_train == 0 || n_train == n)
        throw DataError("split would leave an empty side (" + std::to_string(n) + " windows)");

    auto subset = [&](std::size_t lo, std::size_t hi) {
        const std::size_t base = dataset.start(lo);
        const std::size_t end = dataset.start(hi - 1) + dataset.window_len();
        const auto full = dataset.series();
        std::vector<double> series(full.begin() + static_cast<std::ptrdiff_t>(base),
                                   full.begin() + static_cast<std::ptrdiff_t>(end));
        std::vector<std::size_t> starts;
        std::vector<std::uint8_t> labels;
        starts.reserve(hi - lo);
        labels.reserve(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) {
            starts.push_back(dataset.start(i) - base);
            labels.push_back(static_cast<std::uint8_t>(dataset.label(i)));
        }
        return WindowedDataset(std::move(series), std::move(starts), std::move(labels),
                               dataset.window_len());
    };

    return {subset(0, n_train), subset(n_train, n)};
}

}  // namespace amloda
