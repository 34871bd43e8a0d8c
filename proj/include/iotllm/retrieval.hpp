#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iotllm/knowledge_base.hpp"

// Hybrid sparse (BM25) + dense (cosine) retrieval with metadata filtering and
// rank fusion, plus one-shot demonstration selection.
namespace iotllm {

struct RetrievalConfig {
    std::size_t n_per_retriever = 4;
    std::size_t top_m = 3;
    std::size_t rrf_k = 60;
    double bm25_k1 = 1.2;
    double bm25_b = 0.75;

    void validate() const;
};

struct MetadataFilter {
    std::optional<std::string> data_type;
    std::optional<std::string> task_type;

    bool accepts(const ChunkMetadata& m) const;
};

struct Query {
    std::string text;
    MetadataFilter filter;
};

enum class ScoreSource { sparse, dense, fused };
std::string_view to_string(ScoreSource s);

struct ScoredChunk {
    std::string chunk_id;
    double score = 0;
    ScoreSource source = ScoreSource::fused;
    std::size_t position = 0;  // index into KBIndex::chunks

    bool operator==(const ScoredChunk&) const = default;
};

/// Descending score, ties by ascending chunk_id.
void sort_scored(std::vector<ScoredChunk>& results);

/// BM25 over the filtered chunks (corpus statistics are taken after filtering).
/// Chunks that share no term with the query are dropped.
std::vector<ScoredChunk> sparse_retrieve(const KBIndex& index, const Query& q, std::size_t n,
                                         const RetrievalConfig& cfg = {});

/// Exact cosine top-n. Throws invalid-state if the provider is not the index's embedder.
std::vector<ScoredChunk> dense_retrieve(const KBIndex& index, const Query& q, std::size_t n,
                                        const EmbeddingProvider& provider);

/// Σ 1/(k + rank) over the given ranked lists (rank starts at 1); top_m of the union.
std::vector<ScoredChunk> reciprocal_rank_fusion(std::span<const std::vector<ScoredChunk>> lists,
                                                std::size_t rrf_k, std::size_t top_m);

/// Re-ranks the union of the sparse and dense candidates down to top_m.
class Reranker {
  public:
    virtual ~Reranker() = default;
    virtual std::vector<ScoredChunk> rerank(const Query& q,
                                            const KBIndex& index,
                                            const std::vector<ScoredChunk>& sparse,
                                            const std::vector<ScoredChunk>& dense,
                                            const RetrievalConfig& cfg) const = 0;
};

class RrfReranker final : public Reranker {
  public:
    std::vector<ScoredChunk> rerank(const Query& q,
                                    const KBIndex& index,
                                    const std::vector<ScoredChunk>& sparse,
                                    const std::vector<ScoredChunk>& dense,
                                    const RetrievalConfig& cfg) const override;
};

struct RemoteRerankerConfig {
    std::string base_url;
    std::string model_id;  // e.g. BAAI/bge-reranker-base
    std::string api_key_env;
    int request_timeout_s = 60;
};

/// Cross-encoder hook: `POST {base_url}/rerank` with {model, query, documents, top_n},
/// expecting {results: [{index, relevance_score}]}.
class RemoteReranker final : public Reranker {
  public:
    explicit RemoteReranker(RemoteRerankerConfig cfg);
    std::vector<ScoredChunk> rerank(const Query& q,
                                    const KBIndex& index,
                                    const std::vector<ScoredChunk>& sparse,
                                    const std::vector<ScoredChunk>& dense,
                                    const RetrievalConfig& cfg) const override;

  private:
    RemoteRerankerConfig cfg_;
    std::string api_key_;
};

/// n_per_retriever from each retriever, deduplicated and re-ranked to top_m.
/// Uses reciprocal rank fusion when `reranker` is null.
std::vector<ScoredChunk> hybrid_retrieve(const KBIndex& index, const Query& q, const RetrievalConfig& cfg,
                                         const EmbeddingProvider& provider, const Reranker* reranker = nullptr);

/// One demonstration per label (most similar question to `query_text`, ties by
/// demo_id). With no labels, the single most similar demo of the task type, if any.
std::vector<Demonstration> retrieve_demonstrations(const KBIndex& index,
                                                   std::string_view query_text,
                                                   std::string_view task_type,
                                                   std::span<const std::string> labels,
                                                   const EmbeddingProvider& provider);

/// Retrieval surface used by the benchmark runner.
class Retriever {
  public:
    virtual ~Retriever() = default;
    virtual std::vector<std::string> knowledge(const Query& q) = 0;
    virtual std::vector<Demonstration> demonstrations(std::string_view query_text,
                                                      std::string_view task_type,
                                                      std::span<const std::string> labels) = 0;
};

class IndexRetriever final : public Retriever {
  public:
    IndexRetriever(std::shared_ptr<const KBIndex> index,
                   std::shared_ptr<const EmbeddingProvider> provider,
                   RetrievalConfig cfg,
                   std::shared_ptr<const Reranker> reranker = nullptr);

    std::vector<std::string> knowledge(const Query& q) override;
    std::vector<Demonstration> demonstrations(std::string_view query_text,
                                              std::string_view task_type,
                                              std::span<const std::string> labels) override;

  private:
    std::shared_ptr<const KBIndex> index_;
    std::shared_ptr<const EmbeddingProvider> provider_;
    RetrievalConfig cfg_;
    std::shared_ptr<const Reranker> reranker_;
};

/// Forwards to another retriever and counts calls.
class CountingRetriever final : public Retriever {
  public:
    explicit CountingRetriever(Retriever& inner) : inner_(inner) {}

    std::vector<std::string> knowledge(const Query& q) override;
    std::vector<Demonstration> demonstrations(std::string_view query_text,
                                              std::string_view task_type,
                                              std::span<const std::string> labels) override;

    std::size_t calls() const noexcept { return knowledge_calls_ + demo_calls_; }
    std::size_t knowledge_calls() const noexcept { return knowledge_calls_; }
    std::size_t demonstration_calls() const noexcept { return demo_calls_; }
    void reset() noexcept
    {
        knowledge_calls_ = 0;
        demo_calls_ = 0;
    }

  private:
    Retriever& inner_;
    std::atomic<std::size_t> knowledge_calls_{0};
    std::atomic<std::size_t> demo_calls_{0};
};

}  // namespace iotllm
