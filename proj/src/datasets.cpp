#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>

#include <boost/tokenizer.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "iotllm/benchmark.hpp"
#include "iotllm/error.hpp"
#include "iotllm/text.hpp"

namespace fs = std::filesystem;

namespace iotllm {

namespace {

struct CsvTable {
    std::string file;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;

    std::optional<std::size_t> column(std::string_view name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                return i;
            }
        }
        return std::nullopt;
    }

    std::size_t require(std::string_view name) const
    {
        if (auto c = column(name)) {
            return *c;
        }
        throw Error(ErrorCode::loader, fmt::format("{}: missing column '{}'", file, name));
    }

    /// Columns whose name starts with `prefix`, in header order.
    std::vector<std::size_t> with_prefix(std::string_view prefix) const
    {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i].starts_with(prefix)) {
                out.push_back(i);
            }
        }
        return out;
    }

    double number(std::size_t row, std::size_t col) const
    {
        const auto& cell = rows[row].at(col);
        auto s = text::trim(cell);
        double v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
            throw Error(ErrorCode::loader, fmt::format("{}:{}: column '{}' holds '{}', expected a finite number", file,
                                                       line_numbers[row], header[col], cell));
        }
        return v;
    }
};

CsvTable read_csv(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::loader, "cannot open " + path.string());
    }
    CsvTable table;
    table.file = path.filename().string();
    using Tokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (text::trim(line).empty()) {
            continue;
        }
        std::vector<std::string> cells;
        try {
            Tokenizer tok(line);
            for (const auto& cell : tok) {
                cells.emplace_back(text::trim(cell));
            }
        } catch (const boost::escaped_list_error& e) {
            throw Error(ErrorCode::loader, fmt::format("{}:{}: {}", table.file, line_no, e.what()));
        }
        if (table.header.empty()) {
            table.header = std::move(cells);
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw Error(ErrorCode::loader, fmt::format("{}:{}: {} fields, header has {}", table.file, line_no,
                                                       cells.size(), table.header.size()));
        }
        table.rows.push_back(std::move(cells));
        table.line_numbers.push_back(line_no);
    }
    if (table.header.empty()) {
        throw Error(ErrorCode::loader, table.file + " is empty");
    }
    return table;
}

/// Canonical label for a raw cell, matched case-insensitively.
std::optional<std::string> canonical_label(const TaskSpec& task, std::string_view raw)
{
    const auto lowered = text::to_lower(text::trim(raw));
    for (const auto& label : task.labels) {
        if (text::to_lower(label) == lowered) {
            return label;
        }
    }
    return std::nullopt;
}

std::string default_id(const TaskSpec& task, std::size_t n)
{
    return fmt::format("{}-{:05}", to_string(task.id), n);
}

/// HAR: long format, one row per time step. A new window starts when
/// sample_id changes or, without sample_id, when the label changes or t restarts.
void load_har(const TaskSpec& task, const CsvTable& csv, LoadReport& report)
{
    static constexpr std::array<std::pair<const char*, const char*>, 6> kChannels{
        {{"ax", "g"}, {"ay", "g"}, {"az", "g"}, {"gx", "rad/s"}, {"gy", "rad/s"}, {"gz", "rad/s"}}};
    const auto t_col = csv.require("t");
    std::array<std::size_t, 6> cols{};
    for (std::size_t c = 0; c < kChannels.size(); ++c) {
        cols[c] = csv.require(kChannels[c].first);
    }
    const auto label_col = csv.require("label");
    const auto id_col = csv.column("sample_id");

    std::size_t window_start = 0;
    auto flush = [&](std::size_t end) {
        if (end == window_start) {
            return;
        }
        auto label = canonical_label(task, csv.rows[window_start][label_col]);
        if (!label) {
            ++report.skipped_unknown_label;
            window_start = end;
            return;
        }
        std::vector<Channel> channels;
        for (std::size_t c = 0; c < kChannels.size(); ++c) {
            Channel ch{kChannels[c].first, kChannels[c].second, {}};
            for (std::size_t r = window_start; r < end; ++r) {
                ch.values.push_back(csv.number(r, cols[c]));
            }
            channels.push_back(std::move(ch));
        }
        const auto id = id_col ? csv.rows[window_start][*id_col] : default_id(task, report.samples.size());
        auto series = downsample(TimeSeries(std::move(channels), task.source_rate_hz), task.downsample_factor);
        if (series.length() < 2) {
            throw Error(ErrorCode::loader, fmt::format("{}:{}: window '{}' is too short after down-sampling",
                                                       csv.file, csv.line_numbers[window_start], id));
        }
        report.samples.push_back({id, std::move(series), *label});
        window_start = end;
    };

    for (std::size_t r = 1; r < csv.rows.size(); ++r) {
        bool boundary = false;
        if (id_col) {
            boundary = csv.rows[r][*id_col] != csv.rows[r - 1][*id_col];
        } else {
            boundary = csv.rows[r][label_col] != csv.rows[r - 1][label_col] ||
                       csv.number(r, t_col) <= csv.number(r - 1, t_col);
        }
        if (boundary) {
            flush(r);
        }
    }
    flush(csv.rows.size());
}

/// Heartbeat: wide format, one row per beat window: label, mv_0 .. mv_k at 360 Hz.
void load_heartbeat(const TaskSpec& task, const CsvTable& csv, LoadReport& report)
{
    const auto label_col = csv.require("label");
    const auto id_col = csv.column("sample_id");
    const auto value_cols = csv.with_prefix("mv_");
    if (value_cols.size() < 2 * task.downsample_factor) {
        throw Error(ErrorCode::loader, fmt::format("{}: need at least {} 'mv_' columns", csv.file,
                                                   2 * task.downsample_factor));
    }
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        auto label = canonical_label(task, csv.rows[r][label_col]);
        if (!label) {
            ++report.skipped_unknown_label;
            continue;
        }
        Channel ch{"ecg", "mV", {}};
        for (auto c : value_cols) {
            ch.values.push_back(csv.number(r, c));
        }
        const auto id = id_col ? csv.rows[r][*id_col] : default_id(task, report.samples.size());
        report.samples.push_back(
            {id, downsample(TimeSeries({std::move(ch)}, task.source_rate_hz), task.downsample_factor), *label});
    }
}

/// One row per sample; named numeric columns become single-value channels.
void load_rows(const TaskSpec& task, const CsvTable& csv, const std::vector<std::pair<std::size_t, std::string>>& cols,
               LoadReport& report)
{
    const auto id_col = csv.column("sample_id");
    const bool regression = task.kind == TaskKind::regression;
    std::size_t label_col = 0;
    std::size_t x_col = 0;
    std::size_t y_col = 0;
    if (regression) {
        x_col = csv.require("x_m");
        y_col = csv.require("y_m");
    } else {
        label_col = csv.require("label");
    }
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        GroundTruth truth;
        if (regression) {
            truth = Point{csv.number(r, x_col), csv.number(r, y_col)};
        } else {
            auto label = canonical_label(task, csv.rows[r][label_col]);
            if (!label) {
                ++report.skipped_unknown_label;
                continue;
            }
            truth = *label;
        }
        std::vector<Channel> channels;
        for (const auto& [col, unit] : cols) {
            channels.push_back({csv.header[col], unit, {csv.number(r, col)}});
        }
        const auto id = id_col ? csv.rows[r][*id_col] : default_id(task, report.samples.size());
        report.samples.push_back({id, TimeSeries(std::move(channels), 1.0), std::move(truth)});
    }
}

}  // namespace

LoadReport load_dataset(const TaskSpec& task, const fs::path& path)
{
    const auto file = fs::is_directory(path) ? path / task.dataset_file : path;
    const auto csv = read_csv(file);

    LoadReport report;
    switch (task.id) {
    case TaskId::har2:
    case TaskId::har3: load_har(task, csv, report); break;
    case TaskId::heartbeat: load_heartbeat(task, csv, report); break;
    case TaskId::machine: {
        std::vector<std::pair<std::size_t, std::string>> cols;
        for (const auto* name : {"ts1", "ts2", "ts3", "ts4"}) {
            cols.emplace_back(csv.require(name), "°C");
        }
        cols.emplace_back(csv.require("cooling_power"), "kW");
        cols.emplace_back(csv.require("efficiency"), "%");
        load_rows(task, csv, cols, report);
        break;
    }
    case TaskId::occupancy: {
        std::vector<std::pair<std::size_t, std::string>> cols;
        for (auto c : csv.with_prefix("csi_")) {
            cols.emplace_back(c, "dB");
        }
        if (cols.empty()) {
            throw Error(ErrorCode::loader, csv.file + ": missing column 'csi_*'");
        }
        load_rows(task, csv, cols, report);
        break;
    }
    case TaskId::localization: {
        std::vector<std::pair<std::size_t, std::string>> cols;
        for (auto c : csv.with_prefix("rssi_")) {
            cols.emplace_back(c, "dBm");
        }
        if (cols.empty()) {
            throw Error(ErrorCode::loader, csv.file + ": missing column 'rssi_*'");
        }
        load_rows(task, csv, cols, report);
        break;
    }
    }

    if (report.skipped_unknown_label > 0) {
        spdlog::warn("{}: skipped {} sample(s) with labels outside the {} label set", csv.file,
                     report.skipped_unknown_label, to_string(task.id));
    }
    if (report.samples.empty()) {
        throw Error(ErrorCode::loader, csv.file + " holds no usable samples for task " + std::string(to_string(task.id)));
    }
    return report;
}

}  // namespace iotllm
