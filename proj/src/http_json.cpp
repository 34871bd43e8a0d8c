#include "http_json.hpp"

#include <cstdlib>
#include <httplib.h>

#include "iotllm/error.hpp"

namespace iotllm::detail {

HttpResponse post_json(const std::string& base_url,
                       const std::string& path,
                       const nlohmann::json& body,
                       const std::string& bearer_token,
                       int timeout_s)
{
    // Split "https://host:port/v1" into the origin and the path prefix.
    auto scheme_end = base_url.find("://");
    auto path_start = base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    std::string origin = path_start == std::string::npos ? base_url : base_url.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? "" : base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') {
        prefix.pop_back();
    }

    httplib::Client client(origin);
    client.set_connection_timeout(timeout_s, 0);
    client.set_read_timeout(timeout_s, 0);
    client.set_write_timeout(timeout_s, 0);

    httplib::Headers headers;
    if (!bearer_token.empty()) {
        headers.emplace("Authorization", "Bearer " + bearer_token);
    }
    auto result = client.Post(prefix + path, headers, body.dump(), "application/json");
    if (!result) {
        throw Error(ErrorCode::transient, "request to " + origin + " failed: " + httplib::to_string(result.error()));
    }
    return {result->status, result->body};
}

std::string require_env(const std::string& var_name)
{
    if (var_name.empty()) {
        return {};
    }
    const char* value = std::getenv(var_name.c_str());
    if (value == nullptr || *value == '\0') {
        throw Error(ErrorCode::config, "environment variable " + var_name + " is not set");
    }
    return value;
}

void throw_for_status(const HttpResponse& response, const std::string& what)
{
    const std::string excerpt = response.body.substr(0, 300);
    const bool retryable = response.status == 408 || response.status == 429 || response.status >= 500;
    throw Error(retryable ? ErrorCode::transient : ErrorCode::provider,
                what + " returned HTTP " + std::to_string(response.status) + ": " + excerpt);
}

}  // namespace iotllm::detail
