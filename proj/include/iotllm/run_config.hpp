#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iotllm/benchmark.hpp"
#include "iotllm/embedding.hpp"
#include "iotllm/llm_gateway.hpp"
#include "iotllm/retrieval.hpp"
#include "iotllm/sensor_preprocess.hpp"

namespace iotllm {

struct EmbedderSettings {
    std::string kind = "hash";  // "hash" or "remote"
    std::size_t dimension = 256;
    RemoteEmbedderConfig remote;
};

struct RerankerSettings {
    std::string kind = "rrf";  // "rrf" or "remote"
    RemoteRerankerConfig remote;
};

/// Everything a `run`, `ablate` or `kb` command reads from the TOML config.
/// Relative paths are resolved against the config file's directory.
struct RunConfig {
    std::optional<std::filesystem::path> kb_dir;
    std::optional<std::filesystem::path> data_dir;  // unset: seeded synthetic samples
    std::filesystem::path out_dir = "out";

    std::vector<ProviderConfig> providers;
    std::optional<std::string> active_provider;  // [run] provider = "<name>"

    SerializationConfig serialization;
    RetrievalConfig retrieval;
    std::map<std::string, std::string> roles;
    std::size_t prompt_budget = kDefaultPromptBudget;
    AblationConfig ablation;

    std::uint64_t seed = 7;
    std::size_t per_label = 20;

    EmbedderSettings embedder;
    RerankerSettings reranker;
};

/// Builds and validates a RunConfig from parsed TOML. Throws config errors.
RunConfig run_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Checks that every referenced path exists.
void validate_paths(const RunConfig& cfg);

/// The single provider used for a run: `name` if given, else [run] provider,
/// else the only configured provider.
const ProviderConfig& select_provider(const RunConfig& cfg, const std::optional<std::string>& name);

std::unique_ptr<EmbeddingProvider> make_embedder(const EmbedderSettings& s);
std::unique_ptr<Reranker> make_reranker(const RerankerSettings& s);

}  // namespace iotllm
