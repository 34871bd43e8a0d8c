#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

// Turns raw numeric IoT recordings into compact, tokenizer-friendly text:
// decimation, fixed-precision rounding, per-character spacing, statistical
// features and collection metadata.
namespace iotllm {

struct Channel {
    std::string name;
    std::string unit;
    std::vector<double> values;

    bool operator==(const Channel&) const = default;
};

/// Multi-channel recording. All channels share one length and one sampling rate.
class TimeSeries {
  public:
    TimeSeries(std::vector<Channel> channels, double sampling_rate_hz, std::int64_t start_index = 0);

    const std::vector<Channel>& channels() const noexcept { return channels_; }
    double sampling_rate_hz() const noexcept { return sampling_rate_hz_; }
    std::int64_t start_index() const noexcept { return start_index_; }
    std::size_t length() const noexcept { return channels_.front().values.size(); }

    bool operator==(const TimeSeries&) const = default;

  private:
    std::vector<Channel> channels_;
    double sampling_rate_hz_;
    std::int64_t start_index_;
};

struct CollectionContext {
    std::string device_placement;
    std::string collection_overview;
    std::map<std::string, std::string> extra_metadata;
};

struct SerializationConfig {
    int precision_digits = 2;
    std::string timestep_separator = ", ";
    bool intra_number_spacing = true;
    std::size_t downsample_factor = 1;

    /// Throws invalid-argument when precision_digits is outside [0, 12] or the factor is zero.
    void validate() const;
};

struct ChannelFeatures {
    std::string name;
    double mean = 0;
    double variance = 0;  // population
    double min = 0;
    double max = 0;
    double fft_magnitude_mean = 0;  // one-sided DFT magnitudes, DC excluded
};

struct StatFeatures {
    std::vector<ChannelFeatures> channels;
};

struct DataDescription {
    std::string text;
    std::string source_hash;
};

/// Strided decimation: keeps samples 0, factor, 2*factor, ... with no anti-alias filter.
TimeSeries downsample(const TimeSeries& ts, std::size_t factor);

/// Fixed-point rendering with round-half-away-from-zero applied to the
/// shortest round-trip decimal form of `value`. "-0.00" becomes "0.00".
std::string round_fixed(double value, int precision_digits);

/// Renders each value with round_fixed and, when spacing is on, separates
/// every character of every numeral (and the step separator) by one space.
std::string serialize_series(std::span<const double> values, const SerializationConfig& cfg);

StatFeatures compute_stat_features(const TimeSeries& ts);

/// Enriched description: overview, rate and units, placement, metadata,
/// serialized values, then features. Sections with no content are left out.
/// Pass no features for tabular (single-row) data.
DataDescription build_data_description(const TimeSeries& ts,
                                       const CollectionContext& ctx,
                                       const SerializationConfig& cfg,
                                       const std::optional<StatFeatures>& features);

/// Unsimplified rendering used by the baseline setting: channel names and
/// full-precision comma-separated values, no metadata, no features.
DataDescription build_raw_description(const TimeSeries& ts);

}  // namespace iotllm
