#include <doctest.h>

#include <fstream>

#include "iotllm/embedding.hpp"
#include "iotllm/error.hpp"
#include "iotllm/knowledge_base.hpp"
#include "iotllm/text.hpp"
#include "support/oracles.hpp"

using namespace iotllm;
namespace fs = std::filesystem;

namespace {

struct SentenceCase {
    std::string text;
    std::vector<std::string> sentences;
};

// Hand-labelled splits, including known imperfections of a punctuation rule.
const std::vector<SentenceCase> kSentenceCorpus{
    {"A. B. C.", {"A.", "B.", "C."}},
    {"3.14 is pi. Done.", {"3.14 is pi.", "Done."}},
    {"Hello.", {"Hello."}},
    {"Wait... what?! Yes.", {"Wait...", "what?!", "Yes."}},
    {"No punctuation at all", {"No punctuation at all"}},
    {"First.\nSecond line.\n\nThird.", {"First.", "Second line.", "Third."}},
    {"Version 2.0.1 shipped. It works.", {"Version 2.0.1 shipped.", "It works."}},
    {"e.g. this splits", {"e.g.", "this splits"}},
    {"Ends with fragment. trailing words", {"Ends with fragment.", "trailing words"}},
    {"  Leading space. Trailing space.  ", {"Leading space.", "Trailing space."}},
    {"Is it N? Or V!", {"Is it N?", "Or V!"}},
    {"The rate is 50 Hz.The next", {"The rate is 50 Hz.The next"}},
    {"Tabs\tafter.\tNext.", {"Tabs\tafter.", "Next."}},
    {"", {}},
    {"   ", {}},
    {"!!!", {"!!!"}},
    {"A.  B.", {"A.", "B."}},
    {"Values: 1.5, 2.5. Done", {"Values: 1.5, 2.5.", "Done"}},
    {"Dr. Smith arrived.", {"Dr.", "Smith arrived."}},
    {"Line one\nline two. End.", {"Line one\nline two.", "End."}},
};

SourceDocument doc(std::string id, std::string text, std::string data_type = "IMU")
{
    return {std::move(id), std::move(text), Theme::data_domain_knowledge, std::move(data_type), "har"};
}

double norm(const Embedding& v)
{
    double s = 0;
    for (double x : v) {
        s += x * x;
    }
    return std::sqrt(s);
}

void write(const fs::path& p, const std::string& s)
{
    std::ofstream(p, std::ios::binary) << s;
}

}  // namespace

TEST_CASE("sentence splitter on the labelled corpus")
{
    REQUIRE(kSentenceCorpus.size() == 20);
    for (const auto& c : kSentenceCorpus) {
        INFO("text: " << c.text);
        CHECK(split_sentences(c.text) == c.sentences);
    }
}

TEST_CASE("chunking groups two sentences")
{
    CHECK(chunk_document(doc("d", "A. B. C. D. E.")) == std::vector<std::string>{"A. B.", "C. D.", "E."});
    CHECK(chunk_document(doc("d", "Hello.")) == std::vector<std::string>{"Hello."});
    CHECK(chunk_document(doc("d", "3.14 is pi. Done.")) == std::vector<std::string>{"3.14 is pi. Done."});
    CHECK_THROWS_AS(chunk_document(doc("d", "  \n\t ")), Error);
}

TEST_CASE("hash embedding contract")
{
    const auto empty = hash_embed("");
    CHECK(empty.size() == 256);
    CHECK(norm(empty) == 0);

    const auto a = hash_embed("a");
    CHECK(a.size() == 256);
    CHECK(norm(a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(hash_embed("x x") == hash_embed("x"));
    CHECK(hash_embed("Walking!") == hash_embed("walking"));

    const double c = cosine(hash_embed("walking upstairs"), hash_embed("walking"));
    CHECK(c > 0);
    CHECK(c < 1);
    CHECK(c == doctest::Approx(oracle::cosine(oracle::hashed_bow("walking upstairs", 256),
                                              oracle::hashed_bow("walking", 256))));
    CHECK_THROWS_AS(hash_embed("x", 4), Error);
}

TEST_CASE("hash embedding matches a token-hashing oracle")
{
    oracle::Rng rng(3);
    const std::vector<std::string> vocab{"gait", "walking", "ECG", "beat", "rssi", "Wi-Fi", "room", "café", "x1", "42"};
    for (int trial = 0; trial < 100; ++trial) {
        std::string s;
        for (std::size_t i = 0, n = rng.index(12); i < n; ++i) {
            s += rng.word(vocab) + (rng.coin() ? " " : ", ");
        }
        const auto dim = 8 + rng.index(300);
        const auto got = hash_embed(s, dim);
        const auto want = oracle::hashed_bow(s, dim);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < dim; ++i) {
            CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("hash embedder separates distinct words")
{
    const std::vector<std::string> words{
        "accelerometer", "gyroscope", "walking",  "standing", "lying",    "upstairs",  "sitting",  "transition",
        "heartbeat",     "ventricular", "normal", "premature", "qrs",     "wave",      "lead",     "voltage",
        "cooler",        "hydraulic", "pressure", "temperature", "efficiency", "failure", "pump",   "valve",
        "occupancy",     "channel",   "subcarrier", "amplitude", "router", "bandwidth", "presence", "motion",
        "rssi",          "anchor",    "distance", "meter",     "trilateration", "fading", "multipath", "signal",
        "sample",        "window",    "frequency", "variance", "mean",     "spectrum",  "magnitude", "noise",
        "gravity",       "axis",      "rotation", "angular",   "velocity", "linear",    "smartphone", "waist",
        "device",        "sensor",    "battery",  "firmware",  "protocol", "packet",    "latency",  "buffer",
        "classify",      "predict",   "estimate", "label",     "answer",   "question",  "analysis", "expert",
        "knowledge",     "retrieval", "prompt",   "context",   "example",  "demonstration", "reasoning", "step",
        "physics",       "world",     "model",    "language",  "token",    "digit",     "precision", "decimal",
        "room",          "office",    "corridor", "kitchen",   "garden",   "street",    "vehicle",  "bicycle",
        "morning",       "evening",   "minute",   "second",
    };
    REQUIRE(words.size() == 100);
    CHECK(cosine(hash_embed("a"), hash_embed("b")) < 1.0);

    // One bucket per token means 256 buckets cannot keep 100 words apart with
    // certainty: a pair collapses exactly when both words share bucket and sign.
    HashEmbedder e;
    const auto vecs = embed(words, e);
    std::size_t pairs = 0;
    std::size_t separated = 0;
    for (std::size_t i = 0; i < vecs.size(); ++i) {
        for (std::size_t j = i + 1; j < vecs.size(); ++j) {
            const auto hi = oracle::fnv1a(words[i]);
            const auto hj = oracle::fnv1a(words[j]);
            const bool same_slot = hi % 256 == hj % 256 && (hi >> 63) == (hj >> 63);
            const double c = cosine(vecs[i], vecs[j]);
            CHECK((c < 1.0) == !same_slot);
            ++pairs;
            separated += c < 1.0 ? 1 : 0;
        }
    }
    CHECK(pairs == 4950);
    CHECK(static_cast<double>(separated) / static_cast<double>(pairs) >= 0.99);

    const auto wide = embed(words, HashEmbedder(1 << 16));
    for (std::size_t i = 0; i < wide.size(); ++i) {
        for (std::size_t j = i + 1; j < wide.size(); ++j) {
            CHECK(cosine(wide[i], wide[j]) < 1.0);
        }
    }
}

namespace {

class WrongSizeEmbedder final : public EmbeddingProvider {
  public:
    std::string id() const override { return "wrong"; }
    std::size_t dimension() const override { return 4; }
    std::vector<Embedding> embed_batch(std::span<const std::string> texts) const override
    {
        return std::vector<Embedding>(texts.size(), Embedding{1, 2, 3});
    }
};

}  // namespace

TEST_CASE("embed normalizes and enforces dimension")
{
    HashEmbedder e(32);
    const std::vector<std::string> texts{"a b", "a b"};
    const auto v = embed(texts, e);
    REQUIRE(v.size() == 2);
    CHECK(v[0] == v[1]);
    CHECK(v[0].size() == 32);
    CHECK_THROWS_AS(embed(std::vector<std::string>{}, e), Error);
    CHECK_THROWS_AS(embed(texts, WrongSizeEmbedder{}), Error);
}

TEST_CASE("build_index ids, counts and norms")
{
    HashEmbedder e;
    const auto idx = build_index({doc("d", "One. Two. Three. Four.")}, {}, e);
    REQUIRE(idx.chunks.size() == 2);
    CHECK(idx.chunks[0].chunk_id == "d:0");
    CHECK(idx.chunks[1].chunk_id == "d:1");
    CHECK(idx.demos.empty());
    CHECK(idx.embedder_id == e.id());
    CHECK(idx.dimension == 256);

    const std::vector<Demonstration> demos{
        {"q1", "heartbeat", "N", "normal looking beat", "", "N"},
        {"q2", "heartbeat", "V", "wide early beat", "wide QRS", "V"},
        {"q3", "localization", "", "rssi values", "", "(1, 2)"},
    };
    const auto two = build_index({doc("a", "A. B. C."), doc("b", "D.")}, demos, e);
    CHECK(two.chunks.size() == 3);
    CHECK(two.demos.size() == 3);
    for (const auto& c : two.chunks) {
        CHECK(c.embedding.size() == two.dimension);
        const double n = norm(c.embedding);
        CHECK((n == 0 || std::fabs(n - 1) <= 1e-6));
    }
    CHECK(two.demos[1].embedding == hash_embed("wide early beat"));
    CHECK(build_index({doc("a", "A. B. C."), doc("b", "D.")}, demos, e) == two);

    CHECK_THROWS_AS(build_index({doc("a", "X."), doc("a", "Y.")}, {}, e), Error);
}

TEST_CASE("chunks cover every sentence exactly once, in order")
{
    oracle::Rng rng(41);
    const std::vector<std::string> vocab{"signal", "noise", "3.5", "mV", "gait", "axis", "room", "beat"};
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::string> sentences;
        std::string text;
        for (std::size_t s = 0, n = 1 + rng.index(9); s < n; ++s) {
            std::string sentence;
            for (std::size_t w = 0, m = 1 + rng.index(6); w < m; ++w) {
                sentence += (w ? " " : "") + rng.word(vocab);
            }
            sentence += std::string(1, ".!?"[rng.index(3)]);
            sentences.push_back(sentence);
            text += sentence + (rng.coin() ? " " : "\n");
        }
        const auto chunks = chunk_document(doc("d", text));
        std::string joined;
        for (const auto& c : chunks) {
            CHECK(split_sentences(c).size() <= 2);
            joined += (joined.empty() ? "" : " ") + c;
        }
        std::string expected;
        for (const auto& s : sentences) {
            expected += (expected.empty() ? "" : " ") + s;
        }
        CHECK(joined == expected);
    }
}

TEST_CASE("persist and load round-trip")
{
    oracle::TempDir tmp("kb");
    HashEmbedder e(64);
    const std::vector<Demonstration> demos{{"d1", "har2", "WALKING", "steps?", "periodic", "WALKING"}};
    auto idx = build_index({doc("imu", "Gravity is 1 g. Gyro reads rad/s. Walking is periodic."),
                            {"ecg", "QRS is narrow.", Theme::expert_usage_insight, "ECG", "heartbeat"}},
                           demos, e);
    // Awkward doubles must survive bit-exactly.
    idx.chunks[0].embedding[0] = 0.1 + 0.2;
    idx.chunks[0].embedding[1] = 5e-324;
    const auto dir = tmp / "index";
    persist(idx, dir);
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(dir / "chunks.jsonl"));
    CHECK(fs::exists(dir / "demos.jsonl"));
    CHECK(load(dir) == idx);

    // Rebuild over the existing directory replaces it.
    auto smaller = build_index({doc("only", "Just one.")}, {}, e);
    persist(smaller, dir);
    CHECK(load(dir) == smaller);
    for (const auto& entry : fs::directory_iterator(tmp.path())) {
        CHECK(entry.path().filename() == "index");
    }
}

TEST_CASE("load reports missing and corrupt indexes")
{
    oracle::TempDir tmp("kbbad");
    CHECK_THROWS_WITH_AS(load(tmp / "nope"), doctest::Contains("not-found"), Error);
    fs::create_directories(tmp / "empty");
    CHECK_THROWS_WITH_AS(load(tmp / "empty"), doctest::Contains("manifest.json"), Error);

    HashEmbedder e(16);
    const auto idx = build_index({doc("d", "A. B. C.")}, {}, e);
    const auto dir = tmp / "idx";
    persist(idx, dir);

    write(dir / "manifest.json",
          R"({"embedder_id":"hash-bow-v1:16","dimension":17,"chunk_count":2,"demo_count":0,"format_version":1})");
    try {
        load(dir);
        FAIL("expected a format error");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::format);
        CHECK(std::string(err.what()).find("chunks.jsonl") != std::string::npos);
    }

    persist(idx, dir);
    write(dir / "manifest.json", "{not json");
    try {
        load(dir);
        FAIL("expected a format error");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::format);
        CHECK(std::string(err.what()).find("manifest.json") != std::string::npos);
    }

    persist(idx, dir);
    write(dir / "chunks.jsonl", "{\"chunk_id\": 1}\n");
    CHECK_THROWS_WITH_AS(load(dir), doctest::Contains("chunks.jsonl"), Error);
}

TEST_CASE("source documents come from catalog.json")
{
    oracle::TempDir tmp("docs");
    write(tmp / "a.md", "Alpha one. Alpha two.");
    write(tmp / "b.txt", "Beta.");
    write(tmp / "catalog.json", R"({"a.md": {"theme": "data_domain_knowledge", "data_type": "IMU", "task_type": "har"},
                                    "b.txt": {"theme": "expert_usage_insight", "data_type": "ECG", "task_type": "hb"}})");
    const auto docs = load_source_documents(tmp.path());
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].doc_id == "a");
    CHECK(docs[0].data_type == "IMU");
    CHECK(docs[1].theme == Theme::expert_usage_insight);

    oracle::TempDir bare("nocatalog");
    try {
        load_source_documents(bare.path());
        FAIL("expected a config error");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::config);
        CHECK(std::string(err.what()).find("catalog.json") != std::string::npos);
    }
}
