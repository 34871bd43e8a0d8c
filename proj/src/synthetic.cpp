#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "iotllm/benchmark.hpp"
#include "iotllm/error.hpp"
#include "iotllm/text.hpp"

namespace iotllm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

class Generator {
  public:
    explicit Generator(std::uint64_t seed) : rng_(seed) {}

    double normal(double mean, double sd) { return std::normal_distribution<double>(mean, sd)(rng_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  private:
    std::mt19937_64 rng_;
};

double gaussian(double t, double center, double width)
{
    const double z = (t - center) / width;
    return std::exp(-0.5 * z * z);
}

/// Six-axis IMU window at 50 Hz, five seconds long.
std::vector<Channel> imu_window(std::string_view label, Generator& g)
{
    constexpr double rate = 50.0;
    constexpr std::size_t n = 250;
    std::vector<Channel> ch{{"ax", "g", {}},     {"ay", "g", {}},     {"az", "g", {}},
                            {"gx", "rad/s", {}}, {"gy", "rad/s", {}}, {"gz", "rad/s", {}}};
    const double step_hz = g.uniform(1.6, 2.0);
    const double phase = g.uniform(0, kTwoPi);
    const double transition_at = g.uniform(1.5, 3.5);

    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / rate;
        const double step = kTwoPi * step_hz * t + phase;
        std::array<double, 6> v{};
        if (label == "WALKING") {
            v = {1.0 + 0.25 * std::sin(step), 0.08 * std::sin(step / 2), 0.12 * std::sin(step + 0.6),
                 0.45 * std::sin(step / 2), 0.30 * std::sin(step), 0.20 * std::sin(step / 2 + 1.0)};
        } else if (label == "WALKING UPSTAIRS") {
            const double s = kTwoPi * (step_hz * 0.8) * t + phase;
            v = {1.0 + 0.35 * std::sin(s), 0.10 * std::sin(s / 2), 0.20 + 0.15 * std::sin(s + 0.4),
                 0.35 * std::sin(s / 2), 0.50 * std::sin(s), 0.15 * std::sin(s / 2)};
        } else if (label == "STANDING") {
            v = {1.0, 0.02, 0.05, 0.0, 0.0, 0.0};
        } else if (label == "LYING") {
            v = {0.05, 0.10, 0.99, 0.0, 0.0, 0.0};
        } else {  // LIE TO SIT: gravity rotates from z to x
            const double progress = 1.0 / (1.0 + std::exp(-(t - transition_at) * 4.0));
            const double angle = progress * std::numbers::pi / 2;
            const double rate_of_turn = 4.0 * progress * (1 - progress) * std::numbers::pi / 2;
            v = {std::sin(angle), 0.05, std::cos(angle), 0.05 * rate_of_turn, rate_of_turn, 0.0};
        }
        const double accel_noise = (label == "STANDING" || label == "LYING") ? 0.005 : 0.03;
        const double gyro_noise = (label == "STANDING" || label == "LYING") ? 0.01 : 0.05;
        for (std::size_t c = 0; c < 6; ++c) {
            ch[c].values.push_back(v[c] + g.normal(0, c < 3 ? accel_noise : gyro_noise));
        }
    }
    return ch;
}

/// One-second single-lead ECG window at 360 Hz.
std::vector<Channel> ecg_window(std::string_view label, Generator& g)
{
    constexpr double rate = 360.0;
    constexpr std::size_t n = 360;
    Channel ecg{"ecg", "mV", {}};
    const double amp = g.uniform(0.9, 1.2);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / rate;
        double v = 0;
        if (label == "N") {
            // P, Q, R, S, T of a sinus beat with its R peak at 0.5 s.
            v = 0.15 * gaussian(t, 0.32, 0.025) - 0.12 * gaussian(t, 0.475, 0.008) + 1.2 * amp * gaussian(t, 0.5, 0.01) -
                0.25 * gaussian(t, 0.525, 0.01) + 0.30 * gaussian(t, 0.75, 0.04);
        } else {
            // Premature wide ventricular complex without a P wave, discordant T,
            // followed by a compensatory pause.
            v = -1.5 * amp * gaussian(t, 0.38, 0.035) + 0.6 * gaussian(t, 0.44, 0.03) - 0.45 * gaussian(t, 0.62, 0.06);
        }
        ecg.values.push_back(v + g.normal(0, 0.02));
    }
    return {ecg};
}

std::vector<Channel> machine_row(std::string_view label, Generator& g)
{
    const bool failing = label == "close to failure";
    const double base_temp = failing ? g.normal(53, 2) : g.normal(38, 2);
    return {{"ts1", "°C", {base_temp + g.normal(0, 0.5)}},
            {"ts2", "°C", {base_temp + 4 + g.normal(0, 0.5)}},
            {"ts3", "°C", {base_temp + 2 + g.normal(0, 0.5)}},
            {"ts4", "°C", {base_temp - 5 + g.normal(0, 0.5)}},
            {"cooling_power", "kW", {failing ? g.normal(1.1, 0.1) : g.normal(2.4, 0.1)}},
            {"efficiency", "%", {failing ? g.normal(20, 1.5) : g.normal(100, 1.0)}}};
}

std::vector<Channel> occupancy_row(std::string_view label, Generator& g)
{
    const bool occupied = label == "occupied";
    const double mean = occupied ? g.normal(18.5, 0.8) : g.normal(20.0, 0.5);
    const double sd = occupied ? g.normal(2.2, 0.3) : g.normal(0.5, 0.1);
    return {{"csi_mean", "dB", {mean}},
            {"csi_std", "dB", {sd}},
            {"csi_min", "dB", {mean - 2.5 * sd}},
            {"csi_max", "dB", {mean + 2.5 * sd}}};
}

}  // namespace

const std::vector<Point>& localization_anchors()
{
    static const std::vector<Point> anchors{{0, 0}, {10, 0}, {0, 10}, {10, 10}};
    return anchors;
}

double rssi_model(const Point& p, const Point& anchor)
{
    const double d = std::max(std::hypot(p.x_m - anchor.x_m, p.y_m - anchor.y_m), 0.5);
    return -30.0 - 25.0 * std::log10(d);
}

std::vector<Sample> generate_synthetic(const TaskSpec& task, std::size_t count, std::uint64_t seed)
{
    if (count == 0) {
        throw Error(ErrorCode::invalid_argument, "synthetic sample count must be >= 1");
    }
    Generator g(seed ^ text::fnv1a64(to_string(task.id)));
    std::vector<Sample> samples;
    samples.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto id = fmt::format("{}-syn-{:05}", to_string(task.id), i);
        if (task.kind == TaskKind::regression) {
            const Point p{static_cast<double>(g.integer(0, 10)), static_cast<double>(g.integer(0, 10))};
            std::vector<Channel> channels;
            for (std::size_t a = 0; a < localization_anchors().size(); ++a) {
                channels.push_back({fmt::format("rssi_{}", a + 1), "dBm",
                                    {rssi_model(p, localization_anchors()[a]) + g.normal(0, 1.5)}});
            }
            samples.push_back({id, TimeSeries(std::move(channels), 1.0), p});
            continue;
        }

        const auto& label = task.labels[i % task.labels.size()];
        std::vector<Channel> channels;
        switch (task.id) {
        case TaskId::har2:
        case TaskId::har3: channels = imu_window(label, g); break;
        case TaskId::heartbeat: channels = ecg_window(label, g); break;
        case TaskId::machine: channels = machine_row(label, g); break;
        case TaskId::occupancy: channels = occupancy_row(label, g); break;
        case TaskId::localization: break;
        }
        TimeSeries raw(std::move(channels), task.tabular ? 1.0 : task.source_rate_hz);
        samples.push_back({id, task.tabular ? raw : downsample(raw, task.downsample_factor), label});
    }
    return samples;
}

}  // namespace iotllm
