#include "iotllm/embedding.hpp"

#include <cmath>

#include <fmt/format.h>

#include "http_json.hpp"
#include "iotllm/error.hpp"
#include "iotllm/text.hpp"

namespace iotllm {

void l2_normalize(Embedding& v)
{
    double ss = 0;
    for (double x : v) {
        ss += x * x;
    }
    if (ss == 0) {
        return;
    }
    const double inv = 1.0 / std::sqrt(ss);
    for (double& x : v) {
        x *= inv;
    }
}

double cosine(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) {
        throw Error(ErrorCode::invalid_argument, "cosine of vectors with different dimensions");
    }
    double dot = 0;
    double na = 0;
    double nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) {
        return 0.0;
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

Embedding hash_embed(std::string_view input, std::size_t dimension)
{
    if (dimension < 8) {
        throw Error(ErrorCode::invalid_argument, "hash embedding dimension must be >= 8");
    }
    Embedding v(dimension, 0.0);
    for (const auto& token : text::tokenize(input)) {
        const auto h = text::fnv1a64(token);
        const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
        v[h % dimension] += sign;
    }
    l2_normalize(v);
    return v;
}

HashEmbedder::HashEmbedder(std::size_t dimension) : dimension_(dimension)
{
    if (dimension_ < 8) {
        throw Error(ErrorCode::invalid_argument, "hash embedding dimension must be >= 8");
    }
}

std::string HashEmbedder::id() const
{
    return fmt::format("hash-bow-v1:{}", dimension_);
}

std::vector<Embedding> HashEmbedder::embed_batch(std::span<const std::string> texts) const
{
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        out.push_back(hash_embed(t, dimension_));
    }
    return out;
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig cfg)
    : cfg_(std::move(cfg)), api_key_(detail::require_env(cfg_.api_key_env))
{
    if (cfg_.base_url.empty() || cfg_.model_id.empty()) {
        throw Error(ErrorCode::config, "remote embedder needs base_url and model_id");
    }
}

std::string RemoteEmbedder::id() const
{
    return fmt::format("remote:{}:{}", cfg_.model_id, cfg_.dimension);
}

std::vector<Embedding> RemoteEmbedder::embed_batch(std::span<const std::string> texts) const
{
    nlohmann::json body = {{"model", cfg_.model_id}, {"input", texts}};
    auto response = detail::post_json(cfg_.base_url, "/embeddings", body, api_key_, cfg_.request_timeout_s);
    if (response.status < 200 || response.status >= 300) {
        detail::throw_for_status(response, "embedding provider");
    }
    std::vector<Embedding> out(texts.size());
    try {
        auto parsed = nlohmann::json::parse(response.body);
        for (const auto& item : parsed.at("data")) {
            auto idx = item.value("index", std::size_t{0});
            if (idx >= out.size()) {
                throw Error(ErrorCode::provider, "embedding provider returned an out-of-range index");
            }
            out[idx] = item.at("embedding").get<Embedding>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::provider, std::string("malformed embedding response: ") + e.what());
    }
    return out;
}

std::vector<Embedding> embed(std::span<const std::string> texts, const EmbeddingProvider& provider)
{
    if (texts.empty()) {
        throw Error(ErrorCode::invalid_argument, "nothing to embed");
    }
    auto vectors = provider.embed_batch(texts);
    if (vectors.size() != texts.size()) {
        throw Error(ErrorCode::provider,
                    fmt::format("embedder returned {} vectors for {} texts", vectors.size(), texts.size()));
    }
    for (auto& v : vectors) {
        if (v.size() != provider.dimension()) {
            throw Error(ErrorCode::provider,
                        fmt::format("embedder returned dimension {}, expected {}", v.size(), provider.dimension()));
        }
        l2_normalize(v);
    }
    return vectors;
}

}  // namespace iotllm
