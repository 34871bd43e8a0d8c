#pragma once

#include <string>
#include <nlohmann/json.hpp>

// Internal helper shared by the HTTP-backed providers.
namespace iotllm::detail {

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// POSTs `body` to `base_url` + `path`. Connection failures and timeouts throw
/// a transient Error; HTTP status codes are returned to the caller.
HttpResponse post_json(const std::string& base_url,
                       const std::string& path,
                       const nlohmann::json& body,
                       const std::string& bearer_token,
                       int timeout_s);

/// Reads the named environment variable; throws a config Error when unset or empty.
std::string require_env(const std::string& var_name);

/// Maps a non-2xx status to the right Error (transient for 408/429/5xx).
[[noreturn]] void throw_for_status(const HttpResponse& response, const std::string& what);

}  // namespace iotllm::detail
