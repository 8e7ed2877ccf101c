#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "core/errors.hpp"
#include "core/trace.hpp"
#include "support/test_util.hpp"

using namespace amloda;
using test_util::TempDir;
using test_util::write_text;

TEST_CASE("load_eco_csv reads a plain three-row file") {
    TempDir tmp;
    const auto path = write_text(tmp.path("t.csv"), "0,100\n1,200\n2,50\n");
    const LoadResult r = load_eco_csv(path);
    REQUIRE(r.trace.size() == 3);
    CHECK(r.trace.values_w[0] == 100.0);
    CHECK(r.trace.values_w[1] == 200.0);
    CHECK(r.trace.values_w[2] == 50.0);
    CHECK(r.trace.sample_period_s == 1.0);
    CHECK_FALSE(r.has_labels);
}

TEST_CASE("load_eco_csv accepts the canonical header and occupied column") {
    TempDir tmp;
    const auto path = write_text(tmp.path("t.csv"),
                                 "timestamp,power_w,occupied\n"
                                 "100,10.5,1\n101,11.5,0\n");
    const LoadResult r = load_eco_csv(path);
    REQUIRE(r.has_labels);
    CHECK(r.trace.start_time == 100);
    CHECK(r.labels.values[0] == 1);
    CHECK(r.labels.values[1] == 0);
}

TEST_CASE("load_eco_csv parses ISO-8601 timestamps") {
    TempDir tmp;
    const auto path = write_text(tmp.path("t.csv"),
                                 "2012-06-01T00:00:00,5\n2012-06-01T00:00:01Z,6\n");
    const LoadResult r = load_eco_csv(path);
    CHECK(r.trace.start_time == 1338508800);
    CHECK(r.trace.sample_period_s == 1.0);
}

TEST_CASE("load_eco_csv: empty file is an error") {
    TempDir tmp;
    const auto path = write_text(tmp.path("empty.csv"), "");
    CHECK_THROWS_WITH_AS(load_eco_csv(path), doctest::Contains("no samples"), DataError);
}

TEST_CASE("load_eco_csv: malformed row names the row number") {
    TempDir tmp;
    const auto path = write_text(tmp.path("bad.csv"), "0,100\n1,abc\n");
    CHECK_THROWS_WITH_AS(load_eco_csv(path), doctest::Contains("row 2"), ParseError);
}

TEST_CASE("load_eco_csv: non-monotonic timestamps rejected") {
    TempDir tmp;
    const auto path = write_text(tmp.path("bad.csv"), "5,100\n4,100\n");
    CHECK_THROWS_AS(load_eco_csv(path), DataError);
}

TEST_CASE("load_eco_csv: missing power markers become NaN") {
    TempDir tmp;
    const auto path = write_text(tmp.path("gap.csv"), "0,100\n1,\n2,-1\n3,50\n");
    const LoadResult r = load_eco_csv(path);
    REQUIRE(r.trace.size() == 4);
    CHECK(std::isnan(r.trace.values_w[1]));
    CHECK(std::isnan(r.trace.values_w[2]));
    CHECK(r.trace.has_missing());
}

TEST_CASE("load_eco_csv handles a full one-day 1 Hz file") {
    TempDir tmp;
    std::string content;
    content.reserve(86400 * 10);
    for (int s = 0; s < 86400; ++s) content += std::to_string(s) + ",100\n";
    const auto path = write_text(tmp.path("day.csv"), content);
    const LoadResult r = load_eco_csv(path);
    CHECK(r.trace.size() == 86400);
    CHECK(r.trace.sample_period_s == 1.0);
}

TEST_CASE("save/load CSV round trip") {
    TempDir tmp;
    PowerTrace trace;
    trace.start_time = 42;
    trace.sample_period_s = 1.0;
    trace.values_w = {0.0, 123.456, 0.1};
    OccupancyLabels labels;
    labels.values = {1, 0, 1};
    const auto path = tmp.path("rt.csv").string();
    save_trace_csv(trace, &labels, path);
    const LoadResult r = load_eco_csv(path);
    REQUIRE(r.has_labels);
    CHECK(r.trace.start_time == 42);
    CHECK(r.trace.values_w == trace.values_w);
    CHECK(r.labels.values == labels.values);
}

TEST_CASE("clean_missing drops markers and keeps labels aligned") {
    PowerTrace trace;
    trace.values_w = {100.0, std::nan(""), 50.0};
    OccupancyLabels labels;
    labels.values = {1, 1, 0};
    const CleanResult r = clean_missing(trace, &labels);
    CHECK(r.trace.values_w == std::vector<double>{100.0, 50.0});
    CHECK(r.labels.values == std::vector<std::uint8_t>{1, 0});
    CHECK(r.report.removed == std::vector<std::size_t>{1});
    CHECK(r.report.to_json() == "{\"removed\":[1]}");
}

TEST_CASE("clean_missing with nothing missing is the identity") {
    PowerTrace trace;
    trace.values_w = {1.0, 2.0, 3.0};
    const CleanResult r = clean_missing(trace, nullptr);
    CHECK(r.trace.values_w == trace.values_w);
    CHECK(r.report.removed.empty());
}

TEST_CASE("clean_missing: all samples missing is an error") {
    PowerTrace trace;
    trace.values_w = {std::nan(""), std::nan("")};
    CHECK_THROWS_AS(clean_missing(trace, nullptr), DataError);
}

TEST_CASE("clean_missing preserves sample order (subsequence property)") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> watts(0.0, 500.0);
    std::bernoulli_distribution missing(0.3);
    PowerTrace trace;
    for (int i = 0; i < 200; ++i)
        trace.values_w.push_back(missing(rng) ? std::nan("") : watts(rng));
    trace.values_w[0] = 1.0;  // keep at least one sample
    const CleanResult r = clean_missing(trace, nullptr);
    std::size_t pos = 0;
    for (double v : trace.values_w) {
        if (std::isnan(v)) continue;
        REQUIRE(pos < r.trace.size());
        CHECK(r.trace.values_w[pos] == v);
        ++pos;
    }
    CHECK(pos == r.trace.size());
}

TEST_CASE("normalize maps endpoints to 0 and 1") {
    PowerTrace trace;
    trace.values_w = {0.0, 50.0, 100.0};
    const auto [values, params] = normalize(trace);
    CHECK(values == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(params.min_w == 0.0);
    CHECK(params.max_w == 100.0);
}

TEST_CASE("normalize of a constant trace gives zeros") {
    PowerTrace trace;
    trace.values_w = {42.0, 42.0};
    const auto [values, params] = normalize(trace);
    CHECK(values == std::vector<double>{0.0, 0.0});
    CHECK(params.min_w == 42.0);
    CHECK(params.max_w == 42.0);
}

TEST_CASE("normalize affine example") {
    PowerTrace trace;
    trace.values_w = {10.0, 20.0, 30.0};
    const auto [values, params] = normalize(trace);
    CHECK(values[0] == doctest::Approx(0.0));
    CHECK(values[1] == doctest::Approx(0.5));
    CHECK(values[2] == doctest::Approx(1.0));
}

TEST_CASE("denormalize hand examples") {
    CHECK(denormalize(std::vector<double>{0.0, 1.0}, {0.0, 100.0}) ==
          std::vector<double>{0.0, 100.0});
    CHECK(denormalize(std::vector<double>{0.5}, {10.0, 30.0})[0] == doctest::Approx(20.0));
}

TEST_CASE("normalize/denormalize round trip on random traces") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> watts(0.0, 3000.0);
    for (int trial = 0; trial < 20; ++trial) {
        PowerTrace trace;
        for (int i = 0; i < 100; ++i) trace.values_w.push_back(watts(rng));
        const auto [values, params] = normalize(trace);
        const std::vector<double> back = denormalize(values, params);
        for (std::size_t i = 0; i < back.size(); ++i) {
            const double denom = std::max(1.0, std::abs(trace.values_w[i]));
            CHECK(std::abs(back[i] - trace.values_w[i]) / denom < 1e-9);
        }
    }
}

TEST_CASE("make_windows counts and errors") {
    OccupancyLabels labels5{{0, 1, 0, 1, 1}};
    const std::vector<double> v5{0.1, 0.2, 0.3, 0.4, 0.5};
    CHECK(make_windows(v5, labels5, 3, 1).size() == 3);

    OccupancyLabels labels3{{0, 1, 0}};
    const std::vector<double> v3{0.1, 0.2, 0.3};
    const WindowedDataset one = make_windows(v3, labels3, 3, 1);
    REQUIRE(one.size() == 1);
    const auto w = one.window(0);
    CHECK(std::vector<double>(w.begin(), w.end()) == v3);

    CHECK_THROWS_AS(make_windows(v3, labels3, 4, 1), DataError);
}

TEST_CASE("make_windows labels each window by its final sample") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::bernoulli_distribution occ(0.4);
    std::vector<double> values(64);
    OccupancyLabels labels;
    for (auto& v : values) v = unit(rng);
    for (std::size_t i = 0; i < values.size(); ++i) labels.values.push_back(occ(rng) ? 1 : 0);
    for (std::size_t stride : {1u, 2u, 5u}) {
        const WindowedDataset ds = make_windows(values, labels, 8, stride);
        for (std::size_t i = 0; i < ds.size(); ++i)
            CHECK(ds.label(i) == labels.values[ds.start(i) + 8 - 1]);
    }
}

TEST_CASE("split_train_test splits chronologically") {
    OccupancyLabels labels{std::vector<std::uint8_t>(10, 0)};
    std::vector<double> values(10, 0.5);
    const WindowedDataset ds = make_windows(values, labels, 1, 1);
    REQUIRE(ds.size() == 10);

    const auto [train, test] = split_train_test(ds, 0.8);
    CHECK(train.size() == 8);
    CHECK(test.size() == 2);

    const auto [half_a, half_b] = split_train_test(make_windows(
        std::vector<double>{0.1, 0.2}, OccupancyLabels{{0, 1}}, 1, 1), 0.5);
    CHECK(half_a.size() == 1);
    CHECK(half_b.size() == 1);

    CHECK_THROWS_AS(split_train_test(make_windows(std::vector<double>{0.1},
                                                  OccupancyLabels{{0}}, 1, 1),
                                     0.8),
                    DataError);
}

TEST_CASE("split keeps test windows strictly after train windows") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> values(120);
    OccupancyLabels labels;
    for (auto& v : values) v = unit(rng);
    labels.values.assign(values.size(), 0);
    const WindowedDataset ds = make_windows(values, labels, 10, 3);
    const auto [train, test] = split_train_test(ds, 0.7);
    // window contents must match the original sequence positions
    const std::size_t last_train_start = train.start(train.size() - 1);
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto w = test.window(i);
        CHECK(w.size() == 10);
    }
    CHECK(train.size() + test.size() == ds.size());
    // first test window in the original indexing starts after the last train start
    CHECK(ds.start(train.size()) > last_train_start);
}

TEST_CASE("timestamp parser accepts epoch seconds and UTC ISO-8601") {
    CHECK(parse_timestamp("0") == 0);
    CHECK(parse_timestamp("1338508800") == 1338508800);
    CHECK(parse_timestamp("1970-01-01T00:00:00") == 0);
    CHECK(parse_timestamp("2012-06-01T00:00:00Z") == 1338508800);
    CHECK(parse_timestamp("2012-06-01 00:00:05") == 1338508805);
    CHECK_THROWS_AS(parse_timestamp("not-a-time"), ParseError);
}
