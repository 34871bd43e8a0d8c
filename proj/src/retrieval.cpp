#include "iotllm/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "http_json.hpp"
#include "iotllm/error.hpp"
#include "iotllm/text.hpp"

namespace iotllm {

void RetrievalConfig::validate() const
{
    if (n_per_retriever == 0 || top_m == 0 || rrf_k == 0) {
        throw Error(ErrorCode::invalid_argument, "retrieval n_per_retriever, top_m and rrf_k must be positive");
    }
    if (top_m > 2 * n_per_retriever) {
        throw Error(ErrorCode::invalid_argument, "top_m must not exceed 2 * n_per_retriever");
    }
    if (!(bm25_k1 > 0) || !(bm25_b > 0)) {
        throw Error(ErrorCode::invalid_argument, "bm25_k1 and bm25_b must be positive");
    }
}

bool MetadataFilter::accepts(const ChunkMetadata& m) const
{
    return (!data_type || *data_type == m.data_type) && (!task_type || *task_type == m.task_type);
}

std::string_view to_string(ScoreSource s)
{
    switch (s) {
    case ScoreSource::sparse: return "sparse";
    case ScoreSource::dense: return "dense";
    case ScoreSource::fused: return "fused";
    }
    return "fused";
}

void sort_scored(std::vector<ScoredChunk>& results)
{
    std::sort(results.begin(), results.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return a.chunk_id < b.chunk_id;
    });
}

namespace {

void truncate(std::vector<ScoredChunk>& v, std::size_t n)
{
    if (v.size() > n) {
        v.resize(n);
    }
}

void require_embedder(const KBIndex& index, const EmbeddingProvider& provider)
{
    if (provider.id() != index.embedder_id) {
        throw Error(ErrorCode::invalid_state, fmt::format("query embedder '{}' does not match index embedder '{}'",
                                                          provider.id(), index.embedder_id));
    }
}

}  // namespace

std::vector<ScoredChunk> sparse_retrieve(const KBIndex& index, const Query& q, std::size_t n,
                                         const RetrievalConfig& cfg)
{
    std::vector<std::size_t> candidates;
    std::vector<std::unordered_map<std::string, std::size_t>> term_freqs;
    std::vector<std::size_t> lengths;
    for (std::size_t i = 0; i < index.chunks.size(); ++i) {
        if (!q.filter.accepts(index.chunks[i].metadata)) {
            continue;
        }
        auto tokens = text::tokenize(index.chunks[i].text);
        std::unordered_map<std::string, std::size_t> tf;
        for (auto& t : tokens) {
            ++tf[t];
        }
        candidates.push_back(i);
        lengths.push_back(tokens.size());
        term_freqs.push_back(std::move(tf));
    }
    if (candidates.empty()) {
        return {};
    }

    double total_len = 0;
    for (auto len : lengths) {
        total_len += static_cast<double>(len);
    }
    const double avgdl = total_len / static_cast<double>(candidates.size());
    if (avgdl == 0) {
        return {};
    }

    auto query_tokens = text::tokenize(q.text);
    std::set<std::string> query_terms(query_tokens.begin(), query_tokens.end());

    const double num_docs = static_cast<double>(candidates.size());
    std::vector<double> scores(candidates.size(), 0.0);
    for (const auto& term : query_terms) {
        std::size_t df = 0;
        for (const auto& tf : term_freqs) {
            df += tf.contains(term) ? 1 : 0;
        }
        if (df == 0) {
            continue;
        }
        const double fdf = static_cast<double>(df);
        const double idf = std::log((num_docs - fdf + 0.5) / (fdf + 0.5) + 1.0);
        for (std::size_t d = 0; d < candidates.size(); ++d) {
            auto it = term_freqs[d].find(term);
            if (it == term_freqs[d].end()) {
                continue;
            }
            const double f = static_cast<double>(it->second);
            const double norm = 1.0 - cfg.bm25_b + cfg.bm25_b * static_cast<double>(lengths[d]) / avgdl;
            scores[d] += idf * f * (cfg.bm25_k1 + 1.0) / (f + cfg.bm25_k1 * norm);
        }
    }

    std::vector<ScoredChunk> results;
    for (std::size_t d = 0; d < candidates.size(); ++d) {
        if (scores[d] > 0) {
            results.push_back({index.chunks[candidates[d]].chunk_id, scores[d], ScoreSource::sparse, candidates[d]});
        }
    }
    sort_scored(results);
    truncate(results, n);
    return results;
}

std::vector<ScoredChunk> dense_retrieve(const KBIndex& index, const Query& q, std::size_t n,
                                        const EmbeddingProvider& provider)
{
    require_embedder(index, provider);
    const std::vector<std::string> texts{q.text};
    const auto query_vec = embed(texts, provider).front();

    std::vector<ScoredChunk> results;
    for (std::size_t i = 0; i < index.chunks.size(); ++i) {
        const auto& chunk = index.chunks[i];
        if (!q.filter.accepts(chunk.metadata)) {
            continue;
        }
        results.push_back({chunk.chunk_id, cosine(query_vec, chunk.embedding), ScoreSource::dense, i});
    }
    sort_scored(results);
    truncate(results, n);
    return results;
}

std::vector<ScoredChunk> reciprocal_rank_fusion(std::span<const std::vector<ScoredChunk>> lists,
                                                std::size_t rrf_k, std::size_t top_m)
{
    std::map<std::string, ScoredChunk> fused;
    for (const auto& list : lists) {
        for (std::size_t rank = 1; rank <= list.size(); ++rank) {
            const auto& item = list[rank - 1];
            auto [it, inserted] = fused.try_emplace(item.chunk_id, ScoredChunk{item.chunk_id, 0.0, ScoreSource::fused,
                                                                               item.position});
            it->second.score += 1.0 / static_cast<double>(rrf_k + rank);
        }
    }
    std::vector<ScoredChunk> results;
    results.reserve(fused.size());
    for (auto& [id, item] : fused) {
        results.push_back(std::move(item));
    }
    sort_scored(results);
    truncate(results, top_m);
    return results;
}

std::vector<ScoredChunk> RrfReranker::rerank(const Query&,
                                             const KBIndex&,
                                             const std::vector<ScoredChunk>& sparse,
                                             const std::vector<ScoredChunk>& dense,
                                             const RetrievalConfig& cfg) const
{
    const std::vector<ScoredChunk> lists[] = {sparse, dense};
    return reciprocal_rank_fusion(lists, cfg.rrf_k, cfg.top_m);
}

RemoteReranker::RemoteReranker(RemoteRerankerConfig cfg)
    : cfg_(std::move(cfg)), api_key_(detail::require_env(cfg_.api_key_env))
{
    if (cfg_.base_url.empty()) {
        throw Error(ErrorCode::config, "remote reranker needs base_url");
    }
}

std::vector<ScoredChunk> RemoteReranker::rerank(const Query& q,
                                                const KBIndex& index,
                                                const std::vector<ScoredChunk>& sparse,
                                                const std::vector<ScoredChunk>& dense,
                                                const RetrievalConfig& cfg) const
{
    std::vector<ScoredChunk> candidates;
    std::set<std::string> seen;
    for (const auto* list : {&sparse, &dense}) {
        for (const auto& item : *list) {
            if (seen.insert(item.chunk_id).second) {
                candidates.push_back(item);
            }
        }
    }
    if (candidates.empty()) {
        return {};
    }
    nlohmann::json documents = nlohmann::json::array();
    for (const auto& c : candidates) {
        documents.push_back(index.chunks.at(c.position).text);
    }
    nlohmann::json body = {
        {"model", cfg_.model_id}, {"query", q.text}, {"documents", documents}, {"top_n", cfg.top_m}};
    auto response = detail::post_json(cfg_.base_url, "/rerank", body, api_key_, cfg_.request_timeout_s);
    if (response.status < 200 || response.status >= 300) {
        detail::throw_for_status(response, "reranker");
    }

    std::vector<ScoredChunk> results;
    try {
        auto parsed = nlohmann::json::parse(response.body);
        for (const auto& r : parsed.at("results")) {
            auto idx = r.at("index").get<std::size_t>();
            if (idx >= candidates.size()) {
                throw Error(ErrorCode::provider, "reranker returned an out-of-range index");
            }
            auto item = candidates[idx];
            item.score = r.at("relevance_score").get<double>();
            item.source = ScoreSource::fused;
            results.push_back(std::move(item));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::provider, std::string("malformed rerank response: ") + e.what());
    }
    sort_scored(results);
    truncate(results, cfg.top_m);
    return results;
}

std::vector<ScoredChunk> hybrid_retrieve(const KBIndex& index, const Query& q, const RetrievalConfig& cfg,
                                         const EmbeddingProvider& provider, const Reranker* reranker)
{
    cfg.validate();
    auto sparse = sparse_retrieve(index, q, cfg.n_per_retriever, cfg);
    auto dense = dense_retrieve(index, q, cfg.n_per_retriever, provider);
    static const RrfReranker rrf;
    const Reranker& r = reranker != nullptr ? *reranker : rrf;
    return r.rerank(q, index, sparse, dense, cfg);
}

std::vector<Demonstration> retrieve_demonstrations(const KBIndex& index,
                                                   std::string_view query_text,
                                                   std::string_view task_type,
                                                   std::span<const std::string> labels,
                                                   const EmbeddingProvider& provider)
{
    require_embedder(index, provider);
    const std::vector<std::string> texts{std::string(query_text)};
    const auto query_vec = embed(texts, provider).front();

    auto best_where = [&](auto&& predicate) -> const IndexedDemonstration* {
        const IndexedDemonstration* best = nullptr;
        double best_score = 0;
        for (const auto& d : index.demos) {
            if (d.demo.task_type != task_type || !predicate(d.demo)) {
                continue;
            }
            const double s = cosine(query_vec, d.embedding);
            if (best == nullptr || s > best_score || (s == best_score && d.demo.demo_id < best->demo.demo_id)) {
                best = &d;
                best_score = s;
            }
        }
        return best;
    };

    std::vector<Demonstration> out;
    if (labels.empty()) {
        if (const auto* d = best_where([](const Demonstration&) { return true; })) {
            out.push_back(d->demo);
        }
        return out;
    }
    for (const auto& label : labels) {
        const auto* d = best_where([&](const Demonstration& demo) { return demo.label == label; });
        if (d == nullptr) {
            throw MissingDemonstration(label);
        }
        out.push_back(d->demo);
    }
    return out;
}

IndexRetriever::IndexRetriever(std::shared_ptr<const KBIndex> index,
                               std::shared_ptr<const EmbeddingProvider> provider,
                               RetrievalConfig cfg,
                               std::shared_ptr<const Reranker> reranker)
    : index_(std::move(index)), provider_(std::move(provider)), cfg_(cfg), reranker_(std::move(reranker))
{
    cfg_.validate();
    if (!index_ || !provider_) {
        throw Error(ErrorCode::invalid_argument, "retriever needs an index and an embedding provider");
    }
    require_embedder(*index_, *provider_);
}

std::vector<std::string> IndexRetriever::knowledge(const Query& q)
{
    std::vector<std::string> texts;
    for (const auto& hit : hybrid_retrieve(*index_, q, cfg_, *provider_, reranker_.get())) {
        texts.push_back(index_->chunks.at(hit.position).text);
    }
    return texts;
}

std::vector<Demonstration> IndexRetriever::demonstrations(std::string_view query_text,
                                                          std::string_view task_type,
                                                          std::span<const std::string> labels)
{
    return retrieve_demonstrations(*index_, query_text, task_type, labels, *provider_);
}

std::vector<std::string> CountingRetriever::knowledge(const Query& q)
{
    ++knowledge_calls_;
    return inner_.knowledge(q);
}

std::vector<Demonstration> CountingRetriever::demonstrations(std::string_view query_text,
                                                             std::string_view task_type,
                                                             std::span<const std::string> labels)
{
    ++demo_calls_;
    return inner_.demonstrations(query_text, task_type, labels);
}

}  // namespace iotllm
