#include <fmt/format.h>

#include "iotllm/error.hpp"
#include "iotllm/run_config.hpp"
#include "iotllm/toml_lite.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace iotllm {

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what)
{
    throw Error(ErrorCode::config, fmt::format("config [{}]: {}", where, what));
}

void reject_unknown(const json& table, const std::string& where, std::initializer_list<std::string_view> known)
{
    for (const auto& [key, _] : table.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            bad(where, fmt::format("unknown key '{}'", key));
        }
    }
}

const json* section(const json& doc, const char* name)
{
    if (!doc.contains(name)) {
        return nullptr;
    }
    const auto& t = doc.at(name);
    if (!t.is_object()) {
        bad(name, "expected a table");
    }
    return &t;
}

template <class T>
void read(const json& t, const std::string& where, const char* key, T& out)
{
    if (!t.contains(key)) {
        return;
    }
    const auto& v = t.at(key);
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) {
            bad(where, fmt::format("'{}' must be a boolean", key));
        }
        out = v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) {
            bad(where, fmt::format("'{}' must be a string", key));
        }
        out = v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) {
            bad(where, fmt::format("'{}' must be a number", key));
        }
        out = v.get<T>();
    } else {
        if (!v.is_number_integer()) {
            bad(where, fmt::format("'{}' must be an integer", key));
        }
        if constexpr (std::is_unsigned_v<T>) {
            if (v.get<std::int64_t>() < 0) {
                bad(where, fmt::format("'{}' must not be negative", key));
            }
        }
        out = v.get<T>();
    }
}

fs::path resolve(const fs::path& base, const std::string& p)
{
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

ProviderConfig provider_from(const json& t, const fs::path& base, std::size_t i)
{
    const auto where = fmt::format("providers #{}", i + 1);
    if (!t.is_object()) {
        bad(where, "expected a table");
    }
    reject_unknown(t, where,
                   {"name", "kind", "base_url", "model_id", "api_key_env", "temperature", "max_output_tokens",
                    "request_timeout_s", "max_retries", "parallelism_limit", "retry_base_ms", "system_prompt",
                    "mock_file", "api_key"});
    if (t.contains("api_key")) {
        bad(where, "API keys are not accepted in config files; name an environment variable with 'api_key_env'");
    }
    ProviderConfig p;
    read(t, where, "name", p.name);
    read(t, where, "kind", p.kind);
    read(t, where, "base_url", p.base_url);
    read(t, where, "model_id", p.model_id);
    read(t, where, "api_key_env", p.api_key_env);
    read(t, where, "temperature", p.temperature);
    read(t, where, "max_output_tokens", p.max_output_tokens);
    read(t, where, "request_timeout_s", p.request_timeout_s);
    read(t, where, "max_retries", p.max_retries);
    read(t, where, "parallelism_limit", p.parallelism_limit);
    read(t, where, "retry_base_ms", p.retry_base_ms);
    read(t, where, "system_prompt", p.system_prompt);
    std::string mock;
    read(t, where, "mock_file", mock);
    if (!mock.empty()) {
        p.mock_file = resolve(base, mock);
    }
    if (p.name.empty()) {
        p.name = p.model_id.empty() ? p.kind : p.model_id;
    }
    p.validate();
    return p;
}

/// Re-raises a validation failure of `section` as a config error.
template <typename F>
void validate_section(std::string_view section_name, F&& check)
{
    try {
        check();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::config) {
            throw;
        }
        throw Error(ErrorCode::config, fmt::format("[{}] {}", section_name, e.what()));
    }
}

}  // namespace

RunConfig run_config_from_json(const json& doc, const fs::path& base)
{
    if (!doc.is_object()) {
        throw Error(ErrorCode::config, "config: expected a table at top level");
    }
    reject_unknown(doc, "top level",
                   {"paths", "run", "serialization", "retrieval", "prompt", "ablation", "synthetic", "roles",
                    "providers", "embedder", "reranker"});
    RunConfig cfg;

    if (const auto* t = section(doc, "paths")) {
        reject_unknown(*t, "paths", {"kb_dir", "data_dir", "out_dir"});
        std::string s;
        if (t->contains("kb_dir")) {
            read(*t, "paths", "kb_dir", s);
            cfg.kb_dir = resolve(base, s);
        }
        if (t->contains("data_dir")) {
            read(*t, "paths", "data_dir", s);
            cfg.data_dir = resolve(base, s);
        }
        if (t->contains("out_dir")) {
            read(*t, "paths", "out_dir", s);
            cfg.out_dir = resolve(base, s);
        }
    }
    if (const auto* t = section(doc, "run")) {
        reject_unknown(*t, "run", {"provider"});
        std::string name;
        read(*t, "run", "provider", name);
        if (!name.empty()) {
            cfg.active_provider = name;
        }
    }
    if (const auto* t = section(doc, "serialization")) {
        reject_unknown(*t, "serialization",
                       {"precision_digits", "timestep_separator", "intra_number_spacing", "downsample_factor"});
        read(*t, "serialization", "precision_digits", cfg.serialization.precision_digits);
        read(*t, "serialization", "timestep_separator", cfg.serialization.timestep_separator);
        read(*t, "serialization", "intra_number_spacing", cfg.serialization.intra_number_spacing);
        read(*t, "serialization", "downsample_factor", cfg.serialization.downsample_factor);
        validate_section("serialization", [&] { cfg.serialization.validate(); });
    }
    if (const auto* t = section(doc, "retrieval")) {
        reject_unknown(*t, "retrieval", {"n_per_retriever", "top_m", "rrf_k", "bm25_k1", "bm25_b"});
        read(*t, "retrieval", "n_per_retriever", cfg.retrieval.n_per_retriever);
        read(*t, "retrieval", "top_m", cfg.retrieval.top_m);
        read(*t, "retrieval", "rrf_k", cfg.retrieval.rrf_k);
        read(*t, "retrieval", "bm25_k1", cfg.retrieval.bm25_k1);
        read(*t, "retrieval", "bm25_b", cfg.retrieval.bm25_b);
        validate_section("retrieval", [&] { cfg.retrieval.validate(); });
    }
    if (const auto* t = section(doc, "prompt")) {
        reject_unknown(*t, "prompt", {"char_budget"});
        read(*t, "prompt", "char_budget", cfg.prompt_budget);
        if (cfg.prompt_budget == 0) {
            bad("prompt", "char_budget must be positive");
        }
    }
    if (const auto* t = section(doc, "ablation")) {
        reject_unknown(*t, "ablation", {"simplify_enrich", "domain_knowledge", "demonstrations", "role_and_cot"});
        read(*t, "ablation", "simplify_enrich", cfg.ablation.simplify_enrich);
        read(*t, "ablation", "domain_knowledge", cfg.ablation.domain_knowledge);
        read(*t, "ablation", "demonstrations", cfg.ablation.demonstrations);
        read(*t, "ablation", "role_and_cot", cfg.ablation.role_and_cot);
    }
    if (const auto* t = section(doc, "synthetic")) {
        reject_unknown(*t, "synthetic", {"seed", "per_label"});
        read(*t, "synthetic", "seed", cfg.seed);
        read(*t, "synthetic", "per_label", cfg.per_label);
        if (cfg.per_label == 0) {
            bad("synthetic", "per_label must be >= 1");
        }
    }
    if (const auto* t = section(doc, "roles")) {
        for (const auto& [task, text] : t->items()) {
            task_from_string(task);
            if (!text.is_string() || text.get<std::string>().empty()) {
                bad("roles", fmt::format("'{}' must be a non-empty string", task));
            }
            cfg.roles[task] = text.get<std::string>();
        }
    }
    if (doc.contains("providers")) {
        const auto& list = doc.at("providers");
        if (!list.is_array()) {
            bad("providers", "expected [[providers]] tables");
        }
        for (std::size_t i = 0; i < list.size(); ++i) {
            cfg.providers.push_back(provider_from(list[i], base, i));
            for (std::size_t j = 0; j < i; ++j) {
                if (cfg.providers[j].name == cfg.providers[i].name) {
                    bad("providers", fmt::format("duplicate provider name '{}'", cfg.providers[i].name));
                }
            }
        }
    }
    if (const auto* t = section(doc, "embedder")) {
        reject_unknown(*t, "embedder", {"kind", "dimension", "base_url", "model_id", "api_key_env", "request_timeout_s"});
        read(*t, "embedder", "kind", cfg.embedder.kind);
        read(*t, "embedder", "dimension", cfg.embedder.dimension);
        read(*t, "embedder", "base_url", cfg.embedder.remote.base_url);
        read(*t, "embedder", "model_id", cfg.embedder.remote.model_id);
        read(*t, "embedder", "api_key_env", cfg.embedder.remote.api_key_env);
        read(*t, "embedder", "request_timeout_s", cfg.embedder.remote.request_timeout_s);
        cfg.embedder.remote.dimension = cfg.embedder.dimension;
        if (cfg.embedder.kind != "hash" && cfg.embedder.kind != "remote") {
            bad("embedder", "kind must be \"hash\" or \"remote\"");
        }
    }
    if (const auto* t = section(doc, "reranker")) {
        reject_unknown(*t, "reranker", {"kind", "base_url", "model_id", "api_key_env", "request_timeout_s"});
        read(*t, "reranker", "kind", cfg.reranker.kind);
        read(*t, "reranker", "base_url", cfg.reranker.remote.base_url);
        read(*t, "reranker", "model_id", cfg.reranker.remote.model_id);
        read(*t, "reranker", "api_key_env", cfg.reranker.remote.api_key_env);
        read(*t, "reranker", "request_timeout_s", cfg.reranker.remote.request_timeout_s);
        if (cfg.reranker.kind != "rrf" && cfg.reranker.kind != "remote") {
            bad("reranker", "kind must be \"rrf\" or \"remote\"");
        }
    }
    return cfg;
}

RunConfig load_run_config(const fs::path& path)
{
    return run_config_from_json(toml::parse_file(path), path.parent_path());
}

void validate_paths(const RunConfig& cfg)
{
    auto must_exist = [](const fs::path& p, const char* what) {
        if (!fs::exists(p)) {
            throw Error(ErrorCode::config, fmt::format("{} '{}' does not exist", what, p.string()));
        }
    };
    if (cfg.kb_dir) {
        must_exist(*cfg.kb_dir, "kb_dir");
    }
    if (cfg.data_dir) {
        must_exist(*cfg.data_dir, "data_dir");
    }
    for (const auto& p : cfg.providers) {
        if (p.kind == "mock") {
            must_exist(p.mock_file, "mock_file");
        }
    }
}

const ProviderConfig& select_provider(const RunConfig& cfg, const std::optional<std::string>& name)
{
    const auto wanted = name ? name : cfg.active_provider;
    if (wanted) {
        for (const auto& p : cfg.providers) {
            if (p.name == *wanted) {
                return p;
            }
        }
        throw Error(ErrorCode::config, fmt::format("no provider named '{}' in config", *wanted));
    }
    if (cfg.providers.size() == 1) {
        return cfg.providers.front();
    }
    if (cfg.providers.empty()) {
        throw Error(ErrorCode::config, "no provider configured; add [[providers]] or pass --mock");
    }
    throw Error(ErrorCode::config, "several providers configured; choose one with --provider or [run] provider");
}

std::unique_ptr<EmbeddingProvider> make_embedder(const EmbedderSettings& s)
{
    if (s.kind == "remote") {
        return std::make_unique<RemoteEmbedder>(s.remote);
    }
    return std::make_unique<HashEmbedder>(s.dimension);
}

std::unique_ptr<Reranker> make_reranker(const RerankerSettings& s)
{
    if (s.kind == "remote") {
        return std::make_unique<RemoteReranker>(s.remote);
    }
    return std::make_unique<RrfReranker>();
}

}  // namespace iotllm
