#include "iotllm/knowledge_base.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "iotllm/error.hpp"
#include "iotllm/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace iotllm {

namespace {
constexpr int kFormatVersion = 1;

bool is_terminal(char c)
{
    return c == '.' || c == '!' || c == '?';
}

bool is_space(char c)
{
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
}  // namespace

std::string_view to_string(Theme theme)
{
    switch (theme) {
    case Theme::data_domain_knowledge: return "data_domain_knowledge";
    case Theme::task_domain_knowledge: return "task_domain_knowledge";
    case Theme::expert_usage_insight: return "expert_usage_insight";
    }
    return "data_domain_knowledge";
}

Theme theme_from_string(std::string_view s)
{
    for (auto t : {Theme::data_domain_knowledge, Theme::task_domain_knowledge, Theme::expert_usage_insight}) {
        if (to_string(t) == s) {
            return t;
        }
    }
    throw Error(ErrorCode::invalid_argument, fmt::format("unknown theme '{}'", s));
}

std::vector<std::string> split_sentences(std::string_view input)
{
    std::vector<std::string> sentences;
    std::size_t start = 0;
    std::size_t i = 0;
    auto emit = [&](std::size_t end) {
        auto s = text::trim(input.substr(start, end - start));
        if (!s.empty()) {
            sentences.emplace_back(s);
        }
        start = end;
    };
    while (i < input.size()) {
        if (!is_terminal(input[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < input.size() && is_terminal(input[j])) {
            ++j;
        }
        if (j == input.size() || is_space(input[j])) {
            emit(j);
        }
        i = j;
    }
    emit(input.size());
    return sentences;
}

std::vector<std::string> chunk_document(const SourceDocument& doc, std::size_t sentences_per_chunk)
{
    if (sentences_per_chunk == 0) {
        throw Error(ErrorCode::invalid_argument, "sentences_per_chunk must be >= 1");
    }
    auto sentences = split_sentences(doc.text);
    if (sentences.empty()) {
        throw Error(ErrorCode::invalid_argument, fmt::format("document '{}' has no text", doc.doc_id));
    }
    std::vector<std::string> chunks;
    for (std::size_t i = 0; i < sentences.size(); i += sentences_per_chunk) {
        std::string chunk;
        for (std::size_t k = i; k < std::min(i + sentences_per_chunk, sentences.size()); ++k) {
            if (!chunk.empty()) {
                chunk += ' ';
            }
            chunk += sentences[k];
        }
        chunks.push_back(std::move(chunk));
    }
    return chunks;
}

KBIndex build_index(const std::vector<SourceDocument>& docs,
                    const std::vector<Demonstration>& demos,
                    const EmbeddingProvider& provider)
{
    KBIndex index;
    index.embedder_id = provider.id();
    index.dimension = provider.dimension();

    std::set<std::string> doc_ids;
    std::vector<std::string> chunk_texts;
    for (const auto& doc : docs) {
        if (!doc_ids.insert(doc.doc_id).second) {
            throw Error(ErrorCode::invalid_argument, fmt::format("duplicate doc_id '{}'", doc.doc_id));
        }
        auto pieces = chunk_document(doc);
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            KnowledgeChunk chunk;
            chunk.chunk_id = fmt::format("{}:{}", doc.doc_id, i);
            chunk.text = pieces[i];
            chunk.metadata = {doc.doc_id, doc.theme, doc.data_type, doc.task_type};
            chunk_texts.push_back(pieces[i]);
            index.chunks.push_back(std::move(chunk));
        }
    }

    std::set<std::string> demo_ids;
    std::vector<std::string> questions;
    for (const auto& d : demos) {
        if (!demo_ids.insert(d.demo_id).second) {
            throw Error(ErrorCode::invalid_argument, fmt::format("duplicate demo_id '{}'", d.demo_id));
        }
        questions.push_back(d.question);
        index.demos.push_back({d, {}});
    }

    if (!chunk_texts.empty()) {
        auto vectors = embed(chunk_texts, provider);
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            index.chunks[i].embedding = std::move(vectors[i]);
        }
    }
    if (!questions.empty()) {
        auto vectors = embed(questions, provider);
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            index.demos[i].embedding = std::move(vectors[i]);
        }
    }
    return index;
}

namespace {

json chunk_to_json(const KnowledgeChunk& c)
{
    return {{"chunk_id", c.chunk_id},
            {"text", c.text},
            {"embedding", c.embedding},
            {"metadata",
             {{"doc_id", c.metadata.doc_id},
              {"theme", to_string(c.metadata.theme)},
              {"data_type", c.metadata.data_type},
              {"task_type", c.metadata.task_type}}}};
}

json demo_to_json(const IndexedDemonstration& d)
{
    return {{"demo_id", d.demo.demo_id},   {"task_type", d.demo.task_type}, {"label", d.demo.label},
            {"question", d.demo.question}, {"analysis", d.demo.analysis},   {"answer", d.demo.answer},
            {"embedding", d.embedding}};
}

Demonstration demo_from_json(const json& j)
{
    Demonstration d;
    d.demo_id = j.at("demo_id").get<std::string>();
    d.task_type = j.at("task_type").get<std::string>();
    d.label = j.value("label", "");
    d.question = j.at("question").get<std::string>();
    d.analysis = j.value("analysis", "");
    d.answer = j.at("answer").get<std::string>();
    return d;
}

void write_file(const fs::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::io, "cannot write " + path.string());
    }
    out << content;
    if (!out) {
        throw Error(ErrorCode::io, "short write to " + path.string());
    }
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::not_found, "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

template <typename Fn>
void for_each_jsonl(const fs::path& path, Fn&& fn)
{
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) {
            continue;
        }
        try {
            fn(json::parse(line), line_no);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::format, fmt::format("{}:{}: {}", path.filename().string(), line_no, e.what()));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::format) {
                throw;
            }
            throw Error(ErrorCode::format, fmt::format("{}:{}: {}", path.filename().string(), line_no, e.what()));
        }
    }
}

}  // namespace

void persist(const KBIndex& index, const fs::path& dir)
{
    const auto target = fs::absolute(dir).lexically_normal();
    const auto name = target.filename().string();
    const auto pid = std::to_string(::getpid());
    const auto staging = target.parent_path() / (name + ".tmp-" + pid);
    const auto retired = target.parent_path() / (name + ".old-" + pid);

    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    fs::remove_all(staging, ec);
    if (!fs::create_directories(staging, ec) || ec) {
        throw Error(ErrorCode::io, "cannot create " + staging.string());
    }

    json manifest = {{"embedder_id", index.embedder_id},
                     {"dimension", index.dimension},
                     {"chunk_count", index.chunks.size()},
                     {"demo_count", index.demos.size()},
                     {"format_version", kFormatVersion}};
    write_file(staging / "manifest.json", manifest.dump(2) + "\n");

    std::string chunks;
    for (const auto& c : index.chunks) {
        chunks += chunk_to_json(c).dump() + "\n";
    }
    write_file(staging / "chunks.jsonl", chunks);

    std::string demos;
    for (const auto& d : index.demos) {
        demos += demo_to_json(d).dump() + "\n";
    }
    write_file(staging / "demos.jsonl", demos);

    if (fs::exists(target)) {
        fs::rename(target, retired);
    }
    fs::rename(staging, target);
    fs::remove_all(retired, ec);
}

KBIndex load(const fs::path& dir)
{
    const auto manifest_path = dir / "manifest.json";
    if (!fs::is_directory(dir) || !fs::exists(manifest_path)) {
        throw Error(ErrorCode::not_found, "no knowledge base manifest at " + manifest_path.string());
    }

    KBIndex index;
    std::size_t chunk_count = 0;
    std::size_t demo_count = 0;
    try {
        auto manifest = json::parse(read_file(manifest_path));
        if (manifest.at("format_version").get<int>() != kFormatVersion) {
            throw Error(ErrorCode::format, "manifest.json: unsupported format_version");
        }
        index.embedder_id = manifest.at("embedder_id").get<std::string>();
        index.dimension = manifest.at("dimension").get<std::size_t>();
        chunk_count = manifest.at("chunk_count").get<std::size_t>();
        demo_count = manifest.at("demo_count").get<std::size_t>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::format, std::string("manifest.json: ") + e.what());
    }
    if (index.dimension == 0) {
        throw Error(ErrorCode::format, "manifest.json: dimension must be positive");
    }

    auto check_dim = [&](const Embedding& e, std::string_view what) {
        if (e.size() != index.dimension) {
            throw Error(ErrorCode::format, fmt::format("{} has embedding dimension {}, manifest says {}", what,
                                                       e.size(), index.dimension));
        }
    };

    for_each_jsonl(dir / "chunks.jsonl", [&](const json& j, std::size_t) {
        KnowledgeChunk c;
        c.chunk_id = j.at("chunk_id").get<std::string>();
        c.text = j.at("text").get<std::string>();
        c.embedding = j.at("embedding").get<Embedding>();
        const auto& m = j.at("metadata");
        c.metadata = {m.at("doc_id").get<std::string>(), theme_from_string(m.at("theme").get<std::string>()),
                      m.at("data_type").get<std::string>(), m.at("task_type").get<std::string>()};
        check_dim(c.embedding, "chunks.jsonl: chunk " + c.chunk_id);
        index.chunks.push_back(std::move(c));
    });
    for_each_jsonl(dir / "demos.jsonl", [&](const json& j, std::size_t) {
        IndexedDemonstration d{demo_from_json(j), j.at("embedding").get<Embedding>()};
        check_dim(d.embedding, "demos.jsonl: demo " + d.demo.demo_id);
        index.demos.push_back(std::move(d));
    });

    if (index.chunks.size() != chunk_count) {
        throw Error(ErrorCode::format, fmt::format("chunks.jsonl: {} chunks, manifest.json says {}",
                                                   index.chunks.size(), chunk_count));
    }
    if (index.demos.size() != demo_count) {
        throw Error(ErrorCode::format,
                    fmt::format("demos.jsonl: {} demos, manifest.json says {}", index.demos.size(), demo_count));
    }
    return index;
}

std::vector<SourceDocument> load_source_documents(const fs::path& docs_dir)
{
    const auto catalog_path = docs_dir / "catalog.json";
    if (!fs::exists(catalog_path)) {
        throw Error(ErrorCode::config, "missing " + catalog_path.string());
    }
    json catalog;
    try {
        catalog = json::parse(read_file(catalog_path));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::config, "catalog.json: " + std::string(e.what()));
    }

    std::vector<SourceDocument> docs;
    for (const auto& [filename, meta] : catalog.items()) {
        const fs::path file = docs_dir / filename;
        const auto ext = file.extension().string();
        if (ext != ".txt" && ext != ".md") {
            throw Error(ErrorCode::config, "catalog.json: unsupported document type " + filename);
        }
        if (!fs::exists(file)) {
            throw Error(ErrorCode::config, "catalog.json lists missing file " + filename);
        }
        SourceDocument doc;
        doc.doc_id = file.stem().string();
        doc.text = read_file(file);
        try {
            doc.theme = theme_from_string(meta.at("theme").get<std::string>());
            doc.data_type = meta.at("data_type").get<std::string>();
            doc.task_type = meta.value("task_type", "");
        } catch (const json::exception& e) {
            throw Error(ErrorCode::config, "catalog.json entry " + filename + ": " + e.what());
        }
        docs.push_back(std::move(doc));
    }
    return docs;
}

std::vector<Demonstration> load_demonstrations(const fs::path& demos_file)
{
    if (!fs::exists(demos_file)) {
        throw Error(ErrorCode::config, "missing " + demos_file.string());
    }
    std::vector<Demonstration> demos;
    try {
        auto parsed = json::parse(read_file(demos_file));
        for (const auto& j : parsed) {
            demos.push_back(demo_from_json(j));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::config, demos_file.filename().string() + ": " + e.what());
    }
    return demos;
}

}  // namespace iotllm
