#include "iotllm/llm_gateway.hpp"

#include <charconv>
#include <fstream>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "http_json.hpp"
#include "iotllm/error.hpp"
#include "iotllm/text.hpp"

namespace iotllm {

void ProviderConfig::validate() const
{
    if (temperature < 0) {
        throw Error(ErrorCode::config, fmt::format("provider '{}': temperature must be >= 0", name));
    }
    if (parallelism_limit < 1) {
        throw Error(ErrorCode::config, fmt::format("provider '{}': parallelism_limit must be >= 1", name));
    }
    if (max_retries < 0 || retry_base_ms < 0 || request_timeout_s <= 0 || max_output_tokens <= 0) {
        throw Error(ErrorCode::config, fmt::format("provider '{}': retry and timeout settings must be positive", name));
    }
    if (kind == "openai") {
        if (base_url.empty() || model_id.empty()) {
            throw Error(ErrorCode::config, fmt::format("provider '{}': base_url and model_id are required", name));
        }
    } else if (kind == "mock") {
        if (mock_file.empty()) {
            throw Error(ErrorCode::config, fmt::format("provider '{}': mock_file is required", name));
        }
    } else {
        throw Error(ErrorCode::config, fmt::format("provider '{}': unknown kind '{}'", name, kind));
    }
}

// --- HTTP provider -----------------------------------------------------------

HttpChatProvider::HttpChatProvider(ProviderConfig cfg) : cfg_(std::move(cfg))
{
    api_key_ = detail::require_env(cfg_.api_key_env);
}

std::string HttpChatProvider::send(const CompletionRequest& request)
{
    nlohmann::json messages = nlohmann::json::array();
    if (!cfg_.system_prompt.empty()) {
        messages.push_back({{"role", "system"}, {"content", cfg_.system_prompt}});
    }
    messages.push_back({{"role", "user"}, {"content", request.prompt}});
    nlohmann::json body = {{"model", cfg_.model_id},
                           {"messages", messages},
                           {"temperature", cfg_.temperature},
                           {"max_tokens", cfg_.max_output_tokens}};

    auto response = detail::post_json(cfg_.base_url, "/chat/completions", body, api_key_, cfg_.request_timeout_s);
    if (response.status < 200 || response.status >= 300) {
        detail::throw_for_status(response, fmt::format("provider '{}'", cfg_.name));
    }
    try {
        auto parsed = nlohmann::json::parse(response.body);
        const auto& content = parsed.at("choices").at(0).at("message").at("content");
        return content.is_null() ? std::string{} : content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::provider, fmt::format("provider '{}' sent a malformed completion: {}; body: {}",
                                                     cfg_.name, e.what(), response.body.substr(0, 300)));
    }
}

// --- Mock provider -----------------------------------------------------------

MockProvider MockProvider::scripted(std::vector<std::string> responses)
{
    if (responses.empty()) {
        throw Error(ErrorCode::config, "scripted mock needs at least one response");
    }
    MockProvider m;
    m.mode_ = Mode::scripted;
    m.responses_ = std::move(responses);
    return m;
}

MockProvider MockProvider::oracle()
{
    MockProvider m;
    m.mode_ = Mode::oracle;
    return m;
}

MockProvider MockProvider::from_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::config, "cannot open mock file " + path.string());
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::config, fmt::format("mock file {}: {}", path.filename().string(), e.what()));
    }
    const auto mode = j.value("mode", "scripted");
    MockProvider m;
    if (mode == "scripted") {
        m = scripted(j.value("responses", std::vector<std::string>{}));
    } else if (mode == "oracle") {
        m = oracle();
    } else if (mode == "transcript") {
        m.mode_ = Mode::transcript;
        m.transcript_ = j.value("transcript", std::map<std::string, std::string>{});
        m.default_response_ = j.value("default", "");
    } else {
        throw Error(ErrorCode::config, fmt::format("mock file {}: unknown mode '{}'", path.filename().string(), mode));
    }
    m.fail_first(j.value("fail_first", 0));
    return m;
}

std::string MockProvider::send(const CompletionRequest& request)
{
    if (fail_first_ > 0) {
        std::lock_guard lock(*mutex_);
        if ((*attempts_)[request.ordinal]++ < fail_first_) {
            throw Error(ErrorCode::transient, "mock: scripted transient failure");
        }
    }
    switch (mode_) {
    case Mode::scripted: return responses_[request.ordinal % responses_.size()];
    case Mode::oracle: return "Answer: " + request.reference_answer;
    case Mode::transcript: {
        auto it = transcript_.find(text::sha256_hex(request.prompt));
        return it != transcript_.end() ? it->second : default_response_;
    }
    }
    return {};
}

// --- Gateway -----------------------------------------------------------------

LlmGateway::LlmGateway(std::unique_ptr<ChatProvider> provider, ProviderConfig cfg, Sleeper sleeper)
    : provider_(std::move(provider)), cfg_(std::move(cfg)), sleeper_(std::move(sleeper))
{
    if (!provider_) {
        throw Error(ErrorCode::invalid_argument, "gateway needs a provider");
    }
    if (!sleeper_) {
        sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    }
}

Completion LlmGateway::complete(const CompletionRequest& request) const
{
    if (request.prompt.empty()) {
        throw Error(ErrorCode::invalid_argument, "prompt is empty");
    }
    thread_local std::mt19937_64 jitter_rng{std::random_device{}()};
    const int max_attempts = cfg_.max_retries + 1;
    for (int attempt = 1;; ++attempt) {
        const auto start = std::chrono::steady_clock::now();
        try {
            Completion c;
            c.text = provider_->send(request);
            c.provider_latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                        std::chrono::steady_clock::now() - start)
                                        .count();
            c.attempt_count = attempt;
            return c;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::transient) {
                throw;
            }
            if (attempt >= max_attempts) {
                throw Error(ErrorCode::transient,
                            fmt::format("retries exhausted after {} attempts: {}", attempt, e.what()));
            }
            const double base = static_cast<double>(cfg_.retry_base_ms) * static_cast<double>(1 << (attempt - 1));
            std::uniform_real_distribution<double> jitter(0.0, 0.5);
            const auto delay = std::chrono::milliseconds(static_cast<std::int64_t>(base * (1.0 + jitter(jitter_rng))));
            spdlog::warn("attempt {} for sample '{}' failed ({}); retrying in {} ms", attempt, request.sample_id,
                         e.what(), delay.count());
            sleeper_(delay);
        }
    }
}

std::unique_ptr<ChatProvider> make_provider(const ProviderConfig& cfg)
{
    cfg.validate();
    if (cfg.kind == "mock") {
        return std::make_unique<MockProvider>(MockProvider::from_file(cfg.mock_file));
    }
    return std::make_unique<HttpChatProvider>(cfg);
}

Completion complete(const std::string& prompt, const ProviderConfig& cfg)
{
    LlmGateway gateway(make_provider(cfg), cfg);
    return gateway.complete({prompt, 0, "", ""});
}

// --- Answer parsing ----------------------------------------------------------

std::string_view to_string(ParsedAnswer::Kind kind)
{
    switch (kind) {
    case ParsedAnswer::Kind::label: return "label";
    case ParsedAnswer::Kind::coordinates: return "coordinates";
    case ParsedAnswer::Kind::unparseable: return "unparseable";
    }
    return "unparseable";
}

namespace {

/// Remainder after the last "answer:" on the last line that has one.
std::optional<std::pair<std::string, std::string>> last_answer_line(std::string_view text)
{
    std::istringstream in{std::string(text)};
    std::string line;
    std::optional<std::pair<std::string, std::string>> found;
    while (std::getline(in, line)) {
        const auto lower = text::to_lower(line);
        const auto pos = lower.rfind("answer:");
        if (pos != std::string::npos) {
            found = std::make_pair(std::string(text::trim(line)), line.substr(pos + 7));
        }
    }
    return found;
}

/// Lowercase words joined by single spaces; punctuation acts as a separator.
std::string normalize_words(std::string_view s)
{
    std::string out;
    for (const auto& tok : text::tokenize(s)) {
        if (!out.empty()) {
            out += ' ';
        }
        out += tok;
    }
    return out;
}

bool contains_words(const std::string& haystack, const std::string& needle)
{
    return (" " + haystack + " ").find(" " + needle + " ") != std::string::npos;
}

}  // namespace

ParsedAnswer parse_classification(std::string_view text, const std::vector<std::string>& allowed_labels)
{
    if (allowed_labels.empty()) {
        throw Error(ErrorCode::invalid_argument, "no allowed labels");
    }
    std::vector<std::string> normalized;
    std::set<std::string> unique;
    for (const auto& l : allowed_labels) {
        normalized.push_back(normalize_words(l));
        if (normalized.back().empty() || !unique.insert(text::to_lower(l)).second) {
            throw Error(ErrorCode::invalid_argument, "allowed labels must be non-empty and unique: " + l);
        }
    }

    ParsedAnswer out;
    auto line = last_answer_line(text);
    if (!line) {
        return out;
    }
    out.raw_answer_line = line->first;
    const auto remainder = normalize_words(line->second);
    if (remainder.empty()) {
        return out;
    }

    for (std::size_t i = 0; i < normalized.size(); ++i) {
        if (remainder == normalized[i]) {
            out.kind = ParsedAnswer::Kind::label;
            out.label = allowed_labels[i];
            return out;
        }
    }

    std::vector<std::size_t> hits;
    for (std::size_t i = 0; i < normalized.size(); ++i) {
        if (contains_words(remainder, normalized[i])) {
            hits.push_back(i);
        }
    }
    std::vector<std::size_t> maximal;
    for (auto i : hits) {
        bool subsumed = false;
        for (auto j : hits) {
            if (i != j && normalized[j].size() > normalized[i].size() && contains_words(normalized[j], normalized[i])) {
                subsumed = true;
            }
        }
        if (!subsumed) {
            maximal.push_back(i);
        }
    }
    if (maximal.size() == 1) {
        out.kind = ParsedAnswer::Kind::label;
        out.label = allowed_labels[maximal.front()];
    }
    return out;
}

ParsedAnswer parse_regression(std::string_view text)
{
    ParsedAnswer out;
    auto line = last_answer_line(text);
    if (!line) {
        return out;
    }
    out.raw_answer_line = line->first;

    static const std::regex pair_re(R"(\(\s*([-+]?(?:\d+(?:\.\d*)?|\.\d+))\s*,\s*([-+]?(?:\d+(?:\.\d*)?|\.\d+))\s*\))");
    std::smatch m;
    const std::string remainder = line->second;
    if (!std::regex_search(remainder, m, pair_re)) {
        return out;
    }
    auto to_double = [](const std::string& s) -> std::optional<double> {
        const char* begin = s.data();
        if (!s.empty() && s.front() == '+') {
            ++begin;
        }
        double v = 0;
        auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
            return std::nullopt;
        }
        return v;
    };
    auto x = to_double(m[1].str());
    auto y = to_double(m[2].str());
    if (!x || !y) {
        return out;
    }
    out.kind = ParsedAnswer::Kind::coordinates;
    out.x_m = x;
    out.y_m = y;
    return out;
}

}  // namespace iotllm
