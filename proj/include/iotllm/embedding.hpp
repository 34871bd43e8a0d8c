#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace iotllm {

using Embedding = std::vector<double>;

class EmbeddingProvider {
  public:
    virtual ~EmbeddingProvider() = default;

    /// Stable identifier stored in the index manifest; queries must use the same one.
    virtual std::string id() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<Embedding> embed_batch(std::span<const std::string> texts) const = 0;
};

/// Signed feature hashing over the shared tokenizer, L2-normalized.
/// Empty token sets map to the zero vector.
Embedding hash_embed(std::string_view text, std::size_t dimension = 256);

class HashEmbedder final : public EmbeddingProvider {
  public:
    explicit HashEmbedder(std::size_t dimension = 256);

    std::string id() const override;
    std::size_t dimension() const override { return dimension_; }
    std::vector<Embedding> embed_batch(std::span<const std::string> texts) const override;

  private:
    std::size_t dimension_;
};

struct RemoteEmbedderConfig {
    std::string base_url;     // e.g. https://api.openai.com/v1
    std::string model_id;     // e.g. text-embedding-ada-002
    std::string api_key_env;  // name of the environment variable holding the key
    std::size_t dimension = 1536;
    int request_timeout_s = 60;
};

/// OpenAI-compatible `POST {base_url}/embeddings`.
class RemoteEmbedder final : public EmbeddingProvider {
  public:
    explicit RemoteEmbedder(RemoteEmbedderConfig cfg);

    std::string id() const override;
    std::size_t dimension() const override { return cfg_.dimension; }
    std::vector<Embedding> embed_batch(std::span<const std::string> texts) const override;

  private:
    RemoteEmbedderConfig cfg_;
    std::string api_key_;
};

/// Embeds through `provider` and enforces the contract: one vector per text,
/// provider dimension, unit L2 norm (or zero).
std::vector<Embedding> embed(std::span<const std::string> texts, const EmbeddingProvider& provider);

void l2_normalize(Embedding& v);
double cosine(std::span<const double> a, std::span<const double> b);

}  // namespace iotllm
