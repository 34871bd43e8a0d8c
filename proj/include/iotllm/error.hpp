#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace iotllm {

enum class ErrorCode {
    invalid_argument,
    invalid_state,
    not_found,
    format,
    config,
    io,
    loader,
    provider,   // non-retryable provider response
    transient,  // retryable: timeouts, 429, 5xx, or retries exhausted
    missing_demonstration,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

/// Raised by demonstration retrieval when no demonstration exists for a label.
class MissingDemonstration : public Error {
  public:
    explicit MissingDemonstration(std::string label);

    const std::string& label() const noexcept { return label_; }

  private:
    std::string label_;
};

}  // namespace iotllm
