#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iotllm/benchmark.hpp"

// report.json / report.md emission and merging.
namespace iotllm {

/// Text placed in both report headers describing how the STD column is computed.
extern const char* const kStdDefinition;

/// Runs ordered by model, task, then ladder position. Stable for equal keys.
std::vector<EvalResult> ordered_runs(std::vector<EvalResult> runs);

/// Runs are written in ordered_runs order.
nlohmann::json report_json(const std::vector<EvalResult>& runs);
std::string report_markdown(const std::vector<EvalResult>& runs);

/// Writes report.json and report.md into `out_dir`, creating it if needed.
void write_report(const std::vector<EvalResult>& runs, const std::filesystem::path& out_dir);

/// Runs stored in a report.json.
std::vector<EvalResult> read_report(const std::filesystem::path& report_json_path);

/// Union of several reports. A later run with the same task, model and
/// config digest replaces an earlier one.
std::vector<EvalResult> merge_reports(const std::vector<std::filesystem::path>& report_json_paths);

}  // namespace iotllm
