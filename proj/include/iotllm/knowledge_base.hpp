#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "iotllm/embedding.hpp"

// IoT domain knowledge base and demonstration base: chunking, embedding,
// and a flat on-disk layout (manifest.json + chunks.jsonl + demos.jsonl).
namespace iotllm {

enum class Theme { data_domain_knowledge, task_domain_knowledge, expert_usage_insight };

std::string_view to_string(Theme theme);
Theme theme_from_string(std::string_view s);

struct SourceDocument {
    std::string doc_id;
    std::string text;
    Theme theme = Theme::data_domain_knowledge;
    std::string data_type;
    std::string task_type;
};

struct ChunkMetadata {
    std::string doc_id;
    Theme theme = Theme::data_domain_knowledge;
    std::string data_type;
    std::string task_type;

    bool operator==(const ChunkMetadata&) const = default;
};

struct KnowledgeChunk {
    std::string chunk_id;
    std::string text;
    Embedding embedding;
    ChunkMetadata metadata;

    bool operator==(const KnowledgeChunk&) const = default;
};

struct Demonstration {
    std::string demo_id;
    std::string task_type;
    std::string label;  // empty for regression demos
    std::string question;
    std::string analysis;  // optional
    std::string answer;

    bool operator==(const Demonstration&) const = default;
};

struct IndexedDemonstration {
    Demonstration demo;
    Embedding embedding;  // of the question

    bool operator==(const IndexedDemonstration&) const = default;
};

struct KBIndex {
    std::vector<KnowledgeChunk> chunks;
    std::vector<IndexedDemonstration> demos;
    std::string embedder_id;
    std::size_t dimension = 0;

    bool operator==(const KBIndex&) const = default;
};

/// Sentences end at a run of '.', '!' or '?' followed by whitespace or end of
/// text. A trailing fragment without terminal punctuation is its own sentence.
std::vector<std::string> split_sentences(std::string_view text);

/// Groups consecutive sentences into windows of `sentences_per_chunk`, joined by one space.
std::vector<std::string> chunk_document(const SourceDocument& doc, std::size_t sentences_per_chunk = 2);

/// Chunk ids are "<doc_id>:<ordinal>". Demo questions are embedded, not answers.
KBIndex build_index(const std::vector<SourceDocument>& docs,
                    const std::vector<Demonstration>& demos,
                    const EmbeddingProvider& provider);

/// Writes into a sibling temp directory and swaps it into place.
void persist(const KBIndex& index, const std::filesystem::path& dir);
KBIndex load(const std::filesystem::path& dir);

/// Reads `*.txt`/`*.md` files listed in `catalog.json`
/// ({"file.md": {"theme", "data_type", "task_type"}}). doc_id is the file stem.
std::vector<SourceDocument> load_source_documents(const std::filesystem::path& docs_dir);
std::vector<Demonstration> load_demonstrations(const std::filesystem::path& demos_file);

}  // namespace iotllm
