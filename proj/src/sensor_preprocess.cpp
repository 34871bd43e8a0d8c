#include "iotllm/sensor_preprocess.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <complex>
#include <unsupported/Eigen/FFT>

#include <fmt/format.h>

#include "iotllm/error.hpp"
#include "iotllm/text.hpp"

namespace iotllm {

TimeSeries::TimeSeries(std::vector<Channel> channels, double sampling_rate_hz, std::int64_t start_index)
    : channels_(std::move(channels)), sampling_rate_hz_(sampling_rate_hz), start_index_(start_index)
{
    if (channels_.empty()) {
        throw Error(ErrorCode::invalid_argument, "time series needs at least one channel");
    }
    if (!(sampling_rate_hz_ > 0) || !std::isfinite(sampling_rate_hz_)) {
        throw Error(ErrorCode::invalid_argument, "sampling rate must be positive");
    }
    const auto n = channels_.front().values.size();
    if (n == 0) {
        throw Error(ErrorCode::invalid_argument, "time series must hold at least one sample");
    }
    for (const auto& ch : channels_) {
        if (ch.values.size() != n) {
            throw Error(ErrorCode::invalid_argument,
                        fmt::format("channel '{}' has {} samples, expected {}", ch.name, ch.values.size(), n));
        }
    }
}

void SerializationConfig::validate() const
{
    if (precision_digits < 0 || precision_digits > 12) {
        throw Error(ErrorCode::invalid_argument, "precision_digits must be in [0, 12]");
    }
    if (downsample_factor == 0) {
        throw Error(ErrorCode::invalid_argument, "downsample_factor must be >= 1");
    }
}

TimeSeries downsample(const TimeSeries& ts, std::size_t factor)
{
    if (factor == 0) {
        throw Error(ErrorCode::invalid_argument, "downsample factor must be >= 1");
    }
    if (factor == 1) {
        return ts;
    }
    std::vector<Channel> out;
    out.reserve(ts.channels().size());
    for (const auto& ch : ts.channels()) {
        Channel kept{ch.name, ch.unit, {}};
        kept.values.reserve(ch.values.size() / factor + 1);
        for (std::size_t i = 0; i < ch.values.size(); i += factor) {
            kept.values.push_back(ch.values[i]);
        }
        out.push_back(std::move(kept));
    }
    return TimeSeries(std::move(out), ts.sampling_rate_hz() / static_cast<double>(factor), ts.start_index());
}

std::string round_fixed(double value, int precision_digits)
{
    if (!std::isfinite(value)) {
        throw Error(ErrorCode::invalid_argument, "cannot round a non-finite value");
    }
    if (precision_digits < 0 || precision_digits > 12) {
        throw Error(ErrorCode::invalid_argument, "precision_digits must be in [0, 12]");
    }
    const auto digits = static_cast<std::size_t>(precision_digits);

    // Rounding is applied to the shortest round-trip decimal, so 2.345 rounds
    // as the decimal 2.345 and not as its binary neighbour 2.34499...
    std::string repr(400, '\0');
    auto [end, ec] = std::to_chars(repr.data(), repr.data() + repr.size(), std::fabs(value), std::chars_format::fixed);
    if (ec != std::errc{}) {
        throw Error(ErrorCode::invalid_argument, "cannot format value");
    }
    repr.resize(static_cast<std::size_t>(end - repr.data()));

    std::string int_part = repr;
    std::string frac_part;
    if (auto dot = repr.find('.'); dot != std::string::npos) {
        int_part = repr.substr(0, dot);
        frac_part = repr.substr(dot + 1);
    }

    bool round_up = frac_part.size() > digits && frac_part[digits] >= '5';
    frac_part.resize(digits, '0');

    std::string all = int_part + frac_part;
    if (round_up) {
        std::size_t i = all.size();
        while (i > 0) {
            --i;
            if (all[i] == '9') {
                all[i] = '0';
            } else {
                ++all[i];
                round_up = false;
                break;
            }
        }
        if (round_up) {
            all.insert(all.begin(), '1');
        }
    }

    std::string out = all.substr(0, all.size() - digits);
    if (digits > 0) {
        out += '.';
        out += all.substr(all.size() - digits);
    }
    const bool is_zero = std::all_of(all.begin(), all.end(), [](char c) { return c == '0'; });
    if (value < 0 && !is_zero) {
        out.insert(out.begin(), '-');
    }
    return out;
}

namespace {

std::string spaced(std::string_view token)
{
    std::string out;
    out.reserve(token.size() * 2);
    for (char c : token) {
        if (c == ' ') {
            continue;
        }
        if (!out.empty()) {
            out += ' ';
        }
        out += c;
    }
    return out;
}

}  // namespace

std::string serialize_series(std::span<const double> values, const SerializationConfig& cfg)
{
    cfg.validate();
    if (values.empty()) {
        throw Error(ErrorCode::invalid_argument, "cannot serialize an empty series");
    }
    std::string out;
    if (!cfg.intra_number_spacing) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i > 0) {
                out += cfg.timestep_separator;
            }
            out += round_fixed(values[i], cfg.precision_digits);
        }
        return out;
    }

    // With spacing on, the separator is itself a spaced token: "1 . 2 3 , 4 . 5 6".
    const std::string separator = " " + std::string(text::trim(cfg.timestep_separator)) + " ";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) {
            out += separator;
        }
        out += spaced(round_fixed(values[i], cfg.precision_digits));
    }
    return out;
}

StatFeatures compute_stat_features(const TimeSeries& ts)
{
    StatFeatures features;
    Eigen::FFT<double> fft;
    for (const auto& ch : ts.channels()) {
        const auto& v = ch.values;
        const auto n = v.size();
        if (n < 2) {
            throw Error(ErrorCode::invalid_argument,
                        fmt::format("channel '{}' needs at least 2 samples for features", ch.name));
        }
        ChannelFeatures f;
        f.name = ch.name;

        double sum = 0;
        f.min = v.front();
        f.max = v.front();
        for (double x : v) {
            sum += x;
            f.min = std::min(f.min, x);
            f.max = std::max(f.max, x);
        }
        // Summation error can push the mean a ulp outside [min, max].
        f.mean = std::clamp(sum / static_cast<double>(n), f.min, f.max);

        double ss = 0;
        for (double x : v) {
            ss += (x - f.mean) * (x - f.mean);
        }
        f.variance = ss / static_cast<double>(n);

        std::vector<std::complex<double>> spectrum;
        fft.fwd(spectrum, v);
        const std::size_t last_bin = n / 2;
        double mag_sum = 0;
        for (std::size_t k = 1; k <= last_bin; ++k) {
            mag_sum += std::abs(spectrum[k]);
        }
        f.fft_magnitude_mean = mag_sum / static_cast<double>(last_bin);

        features.channels.push_back(std::move(f));
    }
    return features;
}

namespace {

std::string channel_label(const Channel& ch)
{
    return ch.unit.empty() ? ch.name : fmt::format("{} ({})", ch.name, ch.unit);
}

void append_bits(std::string& out, double v)
{
    fmt::format_to(std::back_inserter(out), "{:016x};", std::bit_cast<std::uint64_t>(v));
}

std::string input_digest(const TimeSeries& ts,
                         const CollectionContext& ctx,
                         const SerializationConfig& cfg,
                         const std::optional<StatFeatures>& features,
                         std::string_view kind)
{
    std::string canon = fmt::format("{}|{}|", kind, ts.start_index());
    append_bits(canon, ts.sampling_rate_hz());
    for (const auto& ch : ts.channels()) {
        canon += fmt::format("|c:{}:{}:{}:", ch.name.size(), ch.name, ch.unit);
        for (double x : ch.values) {
            append_bits(canon, x);
        }
    }
    canon += fmt::format("|ctx:{}:{}|{}:{}", ctx.device_placement.size(), ctx.device_placement,
                         ctx.collection_overview.size(), ctx.collection_overview);
    for (const auto& [k, v] : ctx.extra_metadata) {
        canon += fmt::format("|m:{}:{}={}", k.size(), k, v);
    }
    canon += fmt::format("|cfg:{}:{}:{}:{}", cfg.precision_digits, cfg.timestep_separator,
                         cfg.intra_number_spacing, cfg.downsample_factor);
    if (features) {
        for (const auto& f : features->channels) {
            canon += "|f:" + f.name + ":";
            for (double x : {f.mean, f.variance, f.min, f.max, f.fft_magnitude_mean}) {
                append_bits(canon, x);
            }
        }
    }
    return text::sha256_hex(canon);
}

}  // namespace

DataDescription build_data_description(const TimeSeries& ts,
                                       const CollectionContext& ctx,
                                       const SerializationConfig& cfg,
                                       const std::optional<StatFeatures>& features)
{
    cfg.validate();
    const bool tabular = ts.length() == 1;
    std::string out;
    auto line = [&out](std::string_view s) {
        out += s;
        out += '\n';
    };

    if (!ctx.collection_overview.empty()) {
        line("Collection overview: " + ctx.collection_overview);
    }
    if (!tabular) {
        const double duration = static_cast<double>(ts.length()) / ts.sampling_rate_hz();
        line(fmt::format("Sampling rate: {} Hz; {} samples per channel ({} s).", text::shortest(ts.sampling_rate_hz()),
                         ts.length(), round_fixed(duration, 2)));
    }
    {
        std::string units = "Channels and units: ";
        for (std::size_t i = 0; i < ts.channels().size(); ++i) {
            if (i > 0) {
                units += ", ";
            }
            units += channel_label(ts.channels()[i]);
        }
        line(units + ".");
    }
    if (!ctx.device_placement.empty()) {
        line("Device placement: " + ctx.device_placement);
    }
    for (const auto& [key, value] : ctx.extra_metadata) {
        line(key + ": " + value);
    }

    std::string header = tabular ? "Values" : "Data";
    header += fmt::format(" (rounded to {} decimal places", cfg.precision_digits);
    if (cfg.intra_number_spacing) {
        header += ", characters separated by spaces";
    }
    if (!tabular) {
        header += fmt::format(", time steps separated by \"{}\"", text::trim(cfg.timestep_separator));
    }
    line(header + "):");
    for (const auto& ch : ts.channels()) {
        line(ch.name + ": " + serialize_series(ch.values, cfg));
    }

    if (features && !features->channels.empty()) {
        const int fp = std::min(cfg.precision_digits + 2, 12);
        line("Statistical features:");
        for (const auto& f : features->channels) {
            line(fmt::format("{}: mean {}, variance {}, min {}, max {}, FFT magnitude mean {}", f.name,
                             round_fixed(f.mean, fp), round_fixed(f.variance, fp), round_fixed(f.min, fp),
                             round_fixed(f.max, fp), round_fixed(f.fft_magnitude_mean, fp)));
        }
    }

    return {std::move(out), input_digest(ts, ctx, cfg, features, "enriched")};
}

DataDescription build_raw_description(const TimeSeries& ts)
{
    std::string out;
    for (const auto& ch : ts.channels()) {
        out += ch.name + ": ";
        for (std::size_t i = 0; i < ch.values.size(); ++i) {
            if (i > 0) {
                out += ", ";
            }
            out += text::shortest(ch.values[i]);
        }
        out += '\n';
    }
    return {std::move(out), input_digest(ts, {}, {}, std::nullopt, "raw")};
}

}  // namespace iotllm
