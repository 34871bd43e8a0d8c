#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

// Provider-agnostic chat completion with retries, an offline mock, and
// mechanical answer parsing.
namespace iotllm {

struct ProviderConfig {
    std::string name;
    std::string kind = "openai";  // "openai" (chat-completions compatible) or "mock"
    std::string base_url;
    std::string model_id;
    std::string api_key_env;  // variable name only; the key itself never enters config
    double temperature = 0.0;
    int max_output_tokens = 1024;
    int request_timeout_s = 60;
    int max_retries = 3;
    int parallelism_limit = 4;
    int retry_base_ms = 1000;
    std::string system_prompt;
    std::filesystem::path mock_file;  // for kind == "mock"

    void validate() const;
};

struct CompletionRequest {
    std::string prompt;
    std::size_t ordinal = 0;  // sample position within the run
    std::string sample_id;
    // Ground truth, only read by the oracle mock. Never sent over the network.
    std::string reference_answer;
};

struct Completion {
    std::string text;
    std::int64_t provider_latency_ms = 0;
    int attempt_count = 0;
};

/// One attempt against a backend. Throws Error(transient) for retryable
/// failures and Error(provider) for everything else.
class ChatProvider {
  public:
    virtual ~ChatProvider() = default;
    virtual std::string send(const CompletionRequest& request) = 0;
};

/// `POST {base_url}/chat/completions` with {model, messages, temperature, max_tokens}.
/// Throws a config error at construction when the API key variable is unset.
class HttpChatProvider final : public ChatProvider {
  public:
    explicit HttpChatProvider(ProviderConfig cfg);
    std::string send(const CompletionRequest& request) override;

  private:
    ProviderConfig cfg_;
    std::string api_key_;
};

/// Offline provider. Mock file schema:
///   {"mode": "scripted",   "responses": ["Answer: WALKING", ...]}   response[ordinal % size]
///   {"mode": "oracle"}                                              "Answer: <reference>"
///   {"mode": "transcript", "transcript": {"<sha256 of prompt>": "..."}, "default": "..."}
/// Optional "fail_first": N makes the first N attempts of every request fail transiently.
class MockProvider final : public ChatProvider {
  public:
    enum class Mode { scripted, oracle, transcript };

    static MockProvider scripted(std::vector<std::string> responses);
    static MockProvider oracle();
    static MockProvider from_file(const std::filesystem::path& path);

    MockProvider& fail_first(int n)
    {
        fail_first_ = n;
        return *this;
    }

    std::string send(const CompletionRequest& request) override;

  private:
    MockProvider() = default;

    Mode mode_ = Mode::scripted;
    std::vector<std::string> responses_;
    std::map<std::string, std::string> transcript_;
    std::string default_response_;
    int fail_first_ = 0;
    std::shared_ptr<std::map<std::size_t, int>> attempts_ = std::make_shared<std::map<std::size_t, int>>();
    std::shared_ptr<std::mutex> mutex_ = std::make_shared<std::mutex>();
};

/// Retrying front end over a ChatProvider. Backoff is retry_base_ms * 2^(attempt-1)
/// plus up to 50% random jitter.
class LlmGateway {
  public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    LlmGateway(std::unique_ptr<ChatProvider> provider, ProviderConfig cfg, Sleeper sleeper = {});

    Completion complete(const CompletionRequest& request) const;
    const ProviderConfig& config() const noexcept { return cfg_; }

  private:
    std::unique_ptr<ChatProvider> provider_;
    ProviderConfig cfg_;
    Sleeper sleeper_;
};

/// Builds the provider named by `cfg.kind`.
std::unique_ptr<ChatProvider> make_provider(const ProviderConfig& cfg);

/// Single-shot convenience over make_provider + LlmGateway.
Completion complete(const std::string& prompt, const ProviderConfig& cfg);

struct ParsedAnswer {
    enum class Kind { label, coordinates, unparseable };

    Kind kind = Kind::unparseable;
    std::optional<std::string> label;
    std::optional<double> x_m;
    std::optional<double> y_m;
    std::string raw_answer_line;
};

std::string_view to_string(ParsedAnswer::Kind kind);

/// Last line carrying "Answer:" (case-insensitive); the remainder must name
/// exactly one allowed label, either as the whole remainder or as a whole word
/// sequence inside it. Labels contained in a longer matching label defer to it.
ParsedAnswer parse_classification(std::string_view text, const std::vector<std::string>& allowed_labels);

/// Last "Answer:" line parsed as "(x, y)" in meters.
ParsedAnswer parse_regression(std::string_view text);

}  // namespace iotllm
