#include "iotllm/error.hpp"

namespace iotllm {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::invalid_state: return "invalid-state";
    case ErrorCode::not_found: return "not-found";
    case ErrorCode::format: return "format";
    case ErrorCode::config: return "config";
    case ErrorCode::io: return "io";
    case ErrorCode::loader: return "loader";
    case ErrorCode::provider: return "provider";
    case ErrorCode::transient: return "transient";
    case ErrorCode::missing_demonstration: return "missing-demonstration";
    }
    return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
{}

MissingDemonstration::MissingDemonstration(std::string label)
    : Error(ErrorCode::missing_demonstration, "no demonstration for label \"" + label + "\""),
      label_(std::move(label))
{}

}  // namespace iotllm
