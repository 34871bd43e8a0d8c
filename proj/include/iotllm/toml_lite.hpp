#pragma once

#include <filesystem>
#include <string_view>

#include <nlohmann/json.hpp>

// A TOML subset sufficient for run configuration files: tables, arrays of
// tables, dotted and quoted keys, basic/literal/multi-line strings, integers,
// floats, booleans, arrays and inline tables. Dates are not supported.
// Errors are thrown as config errors carrying "<source>:<line>".
namespace iotllm::toml {

nlohmann::json parse(std::string_view text, std::string_view source = "<config>");
nlohmann::json parse_file(const std::filesystem::path& path);

}  // namespace iotllm::toml
