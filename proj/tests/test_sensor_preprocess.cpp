#include <doctest.h>

#include <charconv>

#include "iotllm/error.hpp"
#include "iotllm/sensor_preprocess.hpp"
#include "support/decimal_oracle.hpp"
#include "support/oracles.hpp"

using namespace iotllm;

namespace {

TimeSeries one_channel(std::vector<double> v, double rate = 10.0)
{
    return TimeSeries({{"x", "g", std::move(v)}}, rate);
}

std::vector<double> iota(std::size_t n)
{
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = static_cast<double>(i);
    }
    return v;
}

void check_relative(double got, double want, double tol)
{
    const double scale = std::max({std::fabs(want), std::fabs(got), 1e-300});
    CHECK(std::fabs(got - want) <= tol * std::max(scale, 1e-6));
}

}  // namespace

TEST_CASE("time series rejects broken shapes")
{
    CHECK_THROWS_AS(TimeSeries({}, 10.0), Error);
    CHECK_THROWS_AS(TimeSeries({{"a", "g", {1, 2}}, {"b", "g", {1}}}, 10.0), Error);
    CHECK_THROWS_AS(one_channel({1, 2}, 0.0), Error);
    CHECK_THROWS_AS(one_channel({}, 10.0), Error);
}

TEST_CASE("downsample keeps every factor-th sample")
{
    const auto out = downsample(one_channel(iota(10), 50.0), 5);
    CHECK(out.channels()[0].values == std::vector<double>{0, 5});
    CHECK(out.sampling_rate_hz() == doctest::Approx(10.0));

    const auto ecg = downsample(one_channel(iota(360), 360.0), 5);
    CHECK(ecg.length() == 72);
    CHECK(ecg.sampling_rate_hz() == doctest::Approx(72.0));

    const auto same = one_channel({3, 1, 4, 1, 5}, 7.0);
    CHECK(downsample(same, 1) == same);

    CHECK_THROWS_AS(downsample(same, 0), Error);
}

TEST_CASE("downsample composes when strides align")
{
    oracle::Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = 1 + rng.index(200);
        std::vector<double> v(n);
        for (auto& x : v) {
            x = rng.uniform(-5, 5);
        }
        const auto a = 1 + rng.index(5);
        const auto b = 1 + rng.index(5);
        const auto ts = one_channel(v, 100.0);
        const auto once = downsample(ts, a * b);
        const auto twice = downsample(downsample(ts, a), b);
        CHECK(once.channels() == twice.channels());
        CHECK(once.sampling_rate_hz() == doctest::Approx(twice.sampling_rate_hz()));
    }
}

TEST_CASE("round_fixed worked cases")
{
    CHECK(round_fixed(9.8123, 2) == "9.81");
    CHECK(round_fixed(2.345, 2) == "2.35");
    CHECK(round_fixed(-2.345, 2) == "-2.35");
    CHECK(round_fixed(-0.004, 2) == "0.00");
    CHECK(round_fixed(0.0, 2) == "0.00");
    CHECK(round_fixed(-0.0, 0) == "0");
    CHECK(round_fixed(9.995, 2) == "10.00");
    CHECK(round_fixed(0.5, 0) == "1");
    CHECK(round_fixed(-0.5, 0) == "-1");
    CHECK(round_fixed(1e21, 1) == "1000000000000000000000.0");
    CHECK_THROWS_AS(round_fixed(std::nan(""), 2), Error);
    CHECK_THROWS_AS(round_fixed(INFINITY, 2), Error);
    CHECK_THROWS_AS(round_fixed(1.0, 13), Error);
}

TEST_CASE("round_fixed agrees with a decimal-string oracle")
{
    oracle::Rng rng(5);
    for (int i = 0; i < 5000; ++i) {
        const double v = rng.wide_real();
        const int p = rng.integer(0, 6);
        INFO("value " << v << " places " << p);
        CHECK(round_fixed(v, p) == oracle::round_decimal(v, p));
    }
}

TEST_CASE("serialize_series formats")
{
    SerializationConfig cfg;
    const std::vector<double> a{1.23, 4.56};
    CHECK(serialize_series(a, cfg) == "1 . 2 3 , 4 . 5 6");
    const std::vector<double> b{-0.5};
    CHECK(serialize_series(b, cfg) == "- 0 . 5 0");

    SerializationConfig plain;
    plain.intra_number_spacing = false;
    const std::vector<double> c{9.81};
    CHECK(serialize_series(c, plain) == "9.81");
    const std::vector<double> d{9.81, -1.0};
    CHECK(serialize_series(d, plain) == "9.81, -1.00");

    CHECK_THROWS_AS(serialize_series(std::vector<double>{}, cfg), Error);
    const std::vector<double> bad{1.0, std::nan("")};
    CHECK_THROWS_AS(serialize_series(bad, cfg), Error);
}

TEST_CASE("serialized values round-trip to round_fixed")
{
    oracle::Rng rng(17);
    SerializationConfig cfg;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> v(1 + rng.index(30));
        for (auto& x : v) {
            x = rng.wide_real();
        }
        cfg.precision_digits = rng.integer(0, 4);
        auto s = serialize_series(v, cfg);
        std::erase(s, ' ');
        std::vector<std::string> parts;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= s.size(); ++i) {
            if (i == s.size() || s[i] == ',') {
                parts.push_back(s.substr(start, i - start));
                start = i + 1;
            }
        }
        REQUIRE(parts.size() == v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            CHECK(parts[i] == round_fixed(v[i], cfg.precision_digits));
        }
    }
}

TEST_CASE("stat features on the worked channel")
{
    const auto f = compute_stat_features(one_channel({1, 2, 3, 4})).channels.at(0);
    CHECK(f.mean == doctest::Approx(2.5));
    CHECK(f.variance == doctest::Approx(1.25));
    CHECK(f.min == 1);
    CHECK(f.max == 4);
    // |X1| = |-2+2i|, |X2| = |-2|
    CHECK(f.fft_magnitude_mean == doctest::Approx((std::sqrt(8.0) + 2.0) / 2.0).epsilon(1e-12));

    const auto c = compute_stat_features(one_channel({5, 5, 5, 5})).channels.at(0);
    CHECK(c.variance == 0);
    CHECK(c.fft_magnitude_mean == doctest::Approx(0).epsilon(1e-12));

    CHECK_THROWS_AS(compute_stat_features(one_channel({1})), Error);
}

TEST_CASE("stat features match direct sums and a naive DFT")
{
    oracle::Rng rng(23);
    for (int trial = 0; trial < 60; ++trial) {
        const auto n = 2 + rng.index(300);
        std::vector<double> v(n);
        const double offset = rng.uniform(-50, 50);
        for (auto& x : v) {
            x = offset + rng.normal(0, rng.uniform(0.1, 10));
        }
        const auto f = compute_stat_features(one_channel(v)).channels.at(0);
        const auto m = oracle::direct_moments(v);
        check_relative(f.mean, m.mean, 1e-9);
        check_relative(f.variance, m.variance, 1e-9);
        CHECK(f.min == m.min);
        CHECK(f.max == m.max);
        check_relative(f.fft_magnitude_mean, oracle::naive_fft_magnitude_mean(v), 1e-9);
        CHECK(f.variance >= 0);
        CHECK(f.min <= f.mean);
        CHECK(f.mean <= f.max);
    }
}

TEST_CASE("FFT magnitude mean ignores a constant offset")
{
    oracle::Rng rng(29);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<double> v(2 + rng.index(200));
        for (auto& x : v) {
            x = rng.uniform(-3, 3);
        }
        auto shifted = v;
        const double c = rng.uniform(-100, 100);
        for (auto& x : shifted) {
            x += c;
        }
        const double a = compute_stat_features(one_channel(v)).channels[0].fft_magnitude_mean;
        const double b = compute_stat_features(one_channel(shifted)).channels[0].fft_magnitude_mean;
        check_relative(b, a, 1e-9);
    }
}

TEST_CASE("data description contents and section elision")
{
    TimeSeries ts({{"ax", "g", {1.0, 1.25, 0.98}}, {"gx", "rad/s", {0.0, 0.1, -0.1}}}, 10.0);
    CollectionContext ctx;
    ctx.device_placement = "waist";
    ctx.collection_overview = "Smartphone IMU recording.";
    SerializationConfig cfg;
    const auto feats = compute_stat_features(ts);
    const auto d = build_data_description(ts, ctx, cfg, feats);
    CHECK(d.text.find("10 Hz") != std::string::npos);
    CHECK(d.text.find("waist") != std::string::npos);
    CHECK(d.text.find("1 . 2 5") != std::string::npos);
    CHECK(d.text.find("Statistical features") != std::string::npos);
    CHECK(d.text.find("rad/s") != std::string::npos);

    // Fixed order: overview, rate, placement, values, features.
    const auto pos_overview = d.text.find("Smartphone IMU");
    const auto pos_rate = d.text.find("10 Hz");
    const auto pos_place = d.text.find("waist");
    const auto pos_values = d.text.find("ax: ");
    const auto pos_feats = d.text.find("Statistical features");
    CHECK(pos_overview < pos_rate);
    CHECK(pos_rate < pos_place);
    CHECK(pos_place < pos_values);
    CHECK(pos_values < pos_feats);

    const auto again = build_data_description(ts, ctx, cfg, feats);
    CHECK(again.text == d.text);
    CHECK(again.source_hash == d.source_hash);

    const auto bare = build_data_description(ts, {}, cfg, std::nullopt);
    CHECK(bare.text.find("Device placement") == std::string::npos);
    CHECK(bare.text.find("Collection overview") == std::string::npos);
    CHECK(bare.text.find("Statistical features") == std::string::npos);
    CHECK(!bare.text.empty());
    CHECK(bare.source_hash != d.source_hash);

    TimeSeries nudged({{"ax", "g", {1.0, 1.25, 0.98 + 1e-12}}, {"gx", "rad/s", {0.0, 0.1, -0.1}}}, 10.0);
    CHECK(build_data_description(nudged, ctx, cfg, feats).source_hash != d.source_hash);
}

TEST_CASE("raw description keeps full precision and no metadata")
{
    TimeSeries ts({{"ax", "g", {1.23456789, -0.5}}}, 50.0);
    const auto d = build_raw_description(ts);
    CHECK(d.text.find("1.23456789") != std::string::npos);
    CHECK(d.text.find("Hz") == std::string::npos);
    CHECK(d.text.find("1 . 2") == std::string::npos);
}
