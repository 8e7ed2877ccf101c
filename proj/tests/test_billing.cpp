#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "core/billing.hpp"
#include "core/errors.hpp"
#include "core/gaussian.hpp"
#include "core/perturb.hpp"

using namespace amloda;

namespace {

PowerTrace trace_of(std::vector<double> values) {
    PowerTrace t;
    t.values_w = std::move(values);
    return t;
}

TouSchedule uniform_tou(std::size_t len, std::vector<double> rates) {
    TouSchedule s;
    for (double r : rates) s.frames.push_back({len, r});
    return s;
}

PowerTrace random_trace(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> watts(0.0, 900.0);
    PowerTrace t;
    t.values_w.reserve(n);
    for (std::size_t i = 0; i < n; ++i) t.values_w.push_back(watts(rng));
    return t;
}

PerturbedTrace random_paired_perturbation(std::mt19937_64& rng, const PowerTrace& trace) {
    std::normal_distribution<double> noise_w(0.0, 40.0);
    NoiseSeries noise;
    noise.values_w.resize((trace.size() + 1) / 2);
    for (double& n : noise.values_w) n = noise_w(rng);
    return apply_paired_perturbation(trace, noise);
}

}  // namespace

TEST_CASE("frame_consumption hand examples") {
    CHECK(frame_consumption(std::vector<double>{1, 2, 3, 4}, 2) == std::vector<double>{3, 7});
    CHECK(frame_consumption(std::vector<double>{1, 2, 3, 4}, 4) == std::vector<double>{10});
    CHECK(frame_consumption(std::vector<double>{95, 105, 50, 50}, 2) ==
          std::vector<double>{200, 100});
}

TEST_CASE("frame_consumption rejects indivisible lengths unless padded") {
    const std::vector<double> v{1, 2, 3};
    CHECK_THROWS_AS(frame_consumption(v, 2), DataError);
    CHECK(frame_consumption(v, 2, true) == std::vector<double>{3, 3});
}

TEST_CASE("frame sums account for every sample") {
    std::mt19937_64 rng(31);
    const PowerTrace t = random_trace(rng, 720);
    for (std::size_t len : {2u, 3u, 6u, 60u}) {
        const std::vector<double> frames = frame_consumption(t.values_w, len);
        double total = 0.0;
        for (double m : frames) total += m;
        CHECK(total == doctest::Approx(t.total()).epsilon(1e-12));
    }
}

TEST_CASE("tou_bill hand examples") {
    TouSchedule two = uniform_tou(2, {2.0, 1.0});
    CHECK(tou_bill({3.0, 7.0}, two) == doctest::Approx(13.0).epsilon(1e-12));

    TouSchedule zero = uniform_tou(2, {0.0, 0.0});
    CHECK(tou_bill({3.0, 7.0}, zero) == 0.0);

    TouSchedule single = uniform_tou(4, {0.5});
    CHECK(tou_bill({200.0}, single) == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("tou_bill rejects mismatched frame counts") {
    CHECK_THROWS_AS(tou_bill({1.0, 2.0, 3.0}, uniform_tou(2, {1.0, 2.0})), InvalidArgumentError);
}

TEST_CASE("plp_bill hand examples") {
    PlpSchedule s;
    s.frame_len = 2;
    s.thresholds = {100.0};
    s.rates = {1.0, 2.0};
    CHECK(plp_bill({50.0, 150.0}, s) == doctest::Approx(350.0).epsilon(1e-12));
    // a frame total equal to the threshold lands in the higher bucket
    CHECK(plp_bill({100.0}, s) == doctest::Approx(200.0).epsilon(1e-12));
    // everything below the first threshold degenerates to a flat rate
    CHECK(plp_bill({10.0, 20.0}, s) == doctest::Approx(30.0).epsilon(1e-12));
}

TEST_CASE("plp bucket boundaries") {
    PlpSchedule s;
    s.frame_len = 1;
    s.thresholds = {10.0, 20.0};
    s.rates = {1.0, 2.0, 3.0};
    CHECK(plp_bucket(s, 5.0) == 0);
    CHECK(plp_bucket(s, 10.0) == 1);
    CHECK(plp_bucket(s, 15.0) == 1);
    CHECK(plp_bucket(s, 20.0) == 2);
    CHECK(plp_bucket(s, 100.0) == 2);
}

TEST_CASE("plp bill is monotone in consumption when rates are non-decreasing") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        PlpSchedule s;
        s.frame_len = 1;
        s.thresholds = {50.0 + 100.0 * unit(rng), 300.0 + 100.0 * unit(rng)};
        const double r1 = unit(rng);
        s.rates = {r1, r1 + unit(rng), r1 + 1.0 + unit(rng)};
        const double m1 = 500.0 * unit(rng);
        const double m2 = m1 + 200.0 * unit(rng);
        CHECK(plp_bill({m1}, s) <= plp_bill({m2}, s) + 1e-12);
    }
}

TEST_CASE("tile_tou repeats a daily schedule across the trace") {
    const TouSchedule daily = uniform_tou(3, {1.0, 2.0});
    const TouSchedule tiled = tile_tou(daily, 12);
    REQUIRE(tiled.frames.size() == 4);
    CHECK(tiled.frames[2].rate == 1.0);
    CHECK_THROWS_AS(tile_tou(daily, 10), DataError);
    CHECK(tile_tou(daily, 10, true).frames.size() == 4);
}

TEST_CASE("TOU billing invariance for AMLODA-paired noise, even frame lengths") {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> rate(0.1, 3.0);
    for (int trial = 0; trial < 60; ++trial) {
        const PowerTrace original = random_trace(rng, 720);
        const PerturbedTrace perturbed = random_paired_perturbation(rng, original);
        for (std::size_t len : {2u, 4u, 6u, 60u}) {
            TouSchedule s = uniform_tou(len, {rate(rng), rate(rng), rate(rng)});
            const InvarianceReport r =
                billing_invariance_check(original, perturbed.trace, Tariff{s});
            CHECK(r.invariant);
        }
    }
}

TEST_CASE("PLP billing invariance for AMLODA-paired noise, even frame lengths") {
    std::mt19937_64 rng(405);
    std::uniform_real_distribution<double> rate(0.1, 3.0);
    std::uniform_real_distribution<double> threshold(100.0, 5000.0);
    for (int trial = 0; trial < 60; ++trial) {
        const PowerTrace original = random_trace(rng, 720);
        const PerturbedTrace perturbed = random_paired_perturbation(rng, original);
        for (std::size_t len : {2u, 4u, 6u, 60u}) {
            PlpSchedule s;
            s.frame_len = len;
            const double t1 = threshold(rng);
            s.thresholds = {t1, t1 * 2};
            const double r1 = rate(rng);
            s.rates = {r1, r1 * 1.5, r1 * 2.5};
            const InvarianceReport r =
                billing_invariance_check(original, perturbed.trace, Tariff{s});
            CHECK(r.invariant);
        }
    }
}

TEST_CASE("odd frame lengths may straddle pairs; delta reported, not asserted") {
    std::mt19937_64 rng(406);
    const PowerTrace original = random_trace(rng, 720);
    const PerturbedTrace perturbed = random_paired_perturbation(rng, original);
    const TouSchedule s = uniform_tou(3, {1.0, 2.0});
    const InvarianceReport r = billing_invariance_check(original, perturbed.trace, Tariff{s});
    CHECK(std::isfinite(r.delta));  // measured and reported either way
}

TEST_CASE("Gaussian noise generally breaks billing invariance") {
    std::mt19937_64 rng(407);
    const PowerTrace original = random_trace(rng, 720);
    GaussianConfig cfg;
    cfg.sigma2 = 7.5;
    cfg.seed = 8;
    const GaussianResult g = gaussian_perturb(original, cfg);
    const TouSchedule s = uniform_tou(2, {1.0, 2.0});
    const InvarianceReport r = billing_invariance_check(original, g.perturbed.trace, Tariff{s});
    CHECK_FALSE(r.invariant);
    CHECK(r.delta != 0.0);
}

TEST_CASE("AMLODA output with frame length 2 bills identically (hand example)") {
    const PowerTrace original = trace_of({100, 100, 50, 50});
    NoiseSeries noise;
    noise.values_w = {5.0, 0.0};
    const PerturbedTrace perturbed = apply_paired_perturbation(original, noise);
    CHECK(perturbed.trace.values_w == std::vector<double>{95, 105, 50, 50});
    const TouSchedule s = uniform_tou(2, {2.0, 1.0});
    const InvarianceReport r = billing_invariance_check(original, perturbed.trace, Tariff{s});
    CHECK(r.invariant);
    CHECK(r.bill_original == doctest::Approx(2.0 * 200 + 1.0 * 100).epsilon(1e-12));
}

TEST_CASE("tariff JSON round trip") {
    const Tariff tou = tariff_from_json(
        R"({"type":"tou","frames":[{"len":2,"rate":0.5},{"len":4,"rate":1.5}]})");
    REQUIRE(std::holds_alternative<TouSchedule>(tou));
    CHECK(std::get<TouSchedule>(tou).frames[1].len == 4);

    const Tariff plp = tariff_from_json(
        R"({"type":"plp","frame_len":2,"thresholds":[100],"rates":[1,2]})");
    REQUIRE(std::holds_alternative<PlpSchedule>(plp));
    CHECK(std::get<PlpSchedule>(plp).thresholds[0] == 100.0);

    CHECK_THROWS_AS(tariff_from_json(R"({"type":"flat"})"), ParseError);
    CHECK_THROWS_AS(tariff_from_json("not json"), ParseError);
    CHECK_THROWS_AS(
        tariff_from_json(R"({"type":"plp","frame_len":2,"thresholds":[100],"rates":[1]})"),
        InvalidArgumentError);
}

TEST_CASE("invariance report JSON fields") {
    const PowerTrace original = trace_of({10, 10});
    const InvarianceReport r =
        billing_invariance_check(original, original, Tariff{uniform_tou(2, {1.0})});
    const std::string json = r.to_json();
    CHECK(json.find("\"bill_original\"") != std::string::npos);
    CHECK(json.find("\"bill_perturbed\"") != std::string::npos);
    CHECK(json.find("\"delta\"") != std::string::npos);
    CHECK(json.find("\"invariant\":true") != std::string::npos);
}
