#include <doctest.h>

#include <fmt/format.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "iotllm/cli.hpp"
#include "iotllm/error.hpp"
#include "iotllm/run_config.hpp"
#include "iotllm/toml_lite.hpp"
#include "support/kb_fixture.hpp"
#include "support/oracles.hpp"

using namespace iotllm;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult cli(std::vector<std::string> args)
{
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

void write(const fs::path& p, const std::string& s)
{
    std::ofstream(p, std::ios::binary) << s;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::string config_error(const std::string& toml)
{
    try {
        run_config_from_json(toml::parse(toml, "t.toml"), "/base");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::config);
        return e.what();
    }
    FAIL("expected a config error");
    return {};
}

/// Builds the shipped knowledge base once per process into a temp directory.
const fs::path& shipped_kb_dir()
{
    static oracle::TempDir dir("cli-kb");
    static const bool built = [] {
        const auto r = cli({"kb", "build", fixture::knowledge_dir().string(),
                            (fixture::knowledge_dir() / "demos.json").string(), (dir / "kb").string()});
        REQUIRE(r.code == 0);
        return true;
    }();
    (void)built;
    static const fs::path kb = dir / "kb";
    return kb;
}

fs::path oracle_mock() { return fixture::source_dir() / "configs" / "oracle_mock.json"; }

}  // namespace

// --- TOML subset --------------------------------------------------------------

TEST_CASE("toml values, tables and arrays of tables")
{
    const auto doc = toml::parse(R"(
# comment
title = "x"   # trailing comment
int = -42
float = 1.5e3
flag = true
list = [1, 2,
        3,]
"quoted key" = 'literal \n'
a.b.c = "dotted"
inline = { k = 1, s = "v" }
multi = """
line one
line two"""
escaped = "tab\there é"

[server]
port = 8080

[server.tls]
enabled = false

[[items]]
name = "first"

[[items]]
name = "second"
)");
    CHECK(doc["title"] == "x");
    CHECK(doc["int"] == -42);
    CHECK(doc["float"] == 1500.0);
    CHECK(doc["flag"] == true);
    CHECK(doc["list"] == json::array({1, 2, 3}));
    CHECK(doc["quoted key"] == "literal \\n");
    CHECK(doc["a"]["b"]["c"] == "dotted");
    CHECK(doc["inline"]["s"] == "v");
    CHECK(doc["multi"] == "line one\nline two");
    CHECK(doc["escaped"] == "tab\there \xc3\xa9");
    CHECK(doc["server"]["port"] == 8080);
    CHECK(doc["server"]["tls"]["enabled"] == false);
    REQUIRE(doc["items"].size() == 2);
    CHECK(doc["items"][1]["name"] == "second");
}

TEST_CASE("toml errors carry source and line")
{
    auto message = [](const std::string& text) {
        try {
            toml::parse(text, "cfg.toml");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::config);
            return std::string(e.what());
        }
        FAIL("expected a parse error");
        return std::string{};
    };
    CHECK(message("a = 1\na = 2\n").find("cfg.toml:2") != std::string::npos);
    CHECK(message("[t]\nx = 1\n[t]\n").find("cfg.toml:3") != std::string::npos);
    CHECK(message("s = \"open\n").find("cfg.toml:1") != std::string::npos);
    CHECK(message("x = [1, 2\n").find("cfg.toml") != std::string::npos);
    CHECK(message("x = 1 2\n").find("cfg.toml:1") != std::string::npos);
    // Unquoted values are rejected without echoing them.
    const auto leak = message("api_key = sk-live-123456\n");
    CHECK(leak.find("sk-live-123456") == std::string::npos);
}

TEST_CASE("example configuration loads")
{
    const auto cfg = load_run_config(fixture::source_dir() / "configs" / "example.toml");
    REQUIRE(cfg.kb_dir);
    CHECK(cfg.kb_dir->is_absolute());
    CHECK(cfg.providers.size() == 2);
    CHECK(select_provider(cfg, std::nullopt).name == "gpt-4o-mini");
    CHECK(select_provider(cfg, "oracle").kind == "mock");
    CHECK(select_provider(cfg, "oracle").mock_file == fixture::source_dir() / "configs" / "oracle_mock.json");
    CHECK(cfg.retrieval.top_m == 3);
    CHECK(cfg.prompt_budget == 24000);
    CHECK(cfg.per_label == 20);
    CHECK_THROWS_AS(select_provider(cfg, "nope"), Error);
}

TEST_CASE("run configuration validation")
{
    CHECK(config_error("[paths]\nkb = \"x\"\n").find("kb") != std::string::npos);
    CHECK(config_error("[bogus]\n").find("bogus") != std::string::npos);
    CHECK(config_error("[retrieval]\ntop_m = 20\n").find("top_m") != std::string::npos);
    CHECK(config_error("[prompt]\nchar_budget = 0\n").find("char_budget") != std::string::npos);
    CHECK(config_error("[[providers]]\nname = \"p\"\nkind = \"openai\"\ntemperature = -1.0\n"
                       "base_url = \"u\"\nmodel_id = \"m\"\n")
              .find("temperature") != std::string::npos);
    CHECK(config_error("[retrieval]\nrrf_k = \"sixty\"\n").find("rrf_k") != std::string::npos);

    const auto secret = config_error("[[providers]]\nname = \"p\"\napi_key = \"sk-secret-value\"\n");
    CHECK(secret.find("api_key_env") != std::string::npos);
    CHECK(secret.find("sk-secret-value") == std::string::npos);

    const auto cfg = run_config_from_json(toml::parse("[paths]\nkb_dir = \"kb\"\nout_dir = \"/abs/out\"\n"), "/base");
    CHECK(*cfg.kb_dir == fs::path("/base/kb"));
    CHECK(cfg.out_dir == fs::path("/abs/out"));

    RunConfig none;
    CHECK_THROWS_AS(select_provider(none, std::nullopt), Error);
    CHECK_THROWS_AS(load_run_config("/definitely/not/here.toml"), Error);

    RunConfig missing;
    missing.kb_dir = "/definitely/not/here";
    CHECK_THROWS_AS(validate_paths(missing), Error);
}

// --- commands -----------------------------------------------------------------

TEST_CASE("kb build reports counts and kb query prints JSON lines")
{
    const auto& kb = shipped_kb_dir();
    const auto index = load(kb);
    CHECK(index.chunks.size() == fixture::shipped_index()->chunks.size());
    CHECK(index == *fixture::shipped_index());

    oracle::TempDir tmp("kbcount");
    const auto r = cli({"kb", "build", fixture::knowledge_dir().string(),
                        (fixture::knowledge_dir() / "demos.json").string(), (tmp / "kb").string()});
    CHECK(r.code == 0);
    CHECK(r.out == fmt::format("chunks: {}\ndemos: {}\nembedder: hash-bow-v1:256\n", index.chunks.size(),
                               index.demos.size()));

    const auto q = cli({"kb", "query", kb.string(), "premature ventricular beat with a wide QRS", "--data-type", "ECG"});
    REQUIRE(q.code == 0);
    std::istringstream lines(q.out);
    std::string line;
    std::size_t n = 0;
    while (std::getline(lines, line)) {
        const auto j = json::parse(line);
        CHECK(j["source"] == "fused");
        const auto id = j["chunk_id"].get<std::string>();
        const auto it = std::find_if(index.chunks.begin(), index.chunks.end(),
                                     [&](const KnowledgeChunk& c) { return c.chunk_id == id; });
        REQUIRE(it != index.chunks.end());
        CHECK(it->metadata.data_type == "ECG");
        ++n;
    }
    CHECK(n >= 1);
    CHECK(n <= 3);

    const auto sparse = cli({"kb", "query", kb.string(), "gyroscope", "--mode", "sparse", "-n", "2"});
    CHECK(sparse.code == 0);
    CHECK(sparse.out.find("\"sparse\"") != std::string::npos);
}

TEST_CASE("kb build errors map to exit codes")
{
    oracle::TempDir tmp("kberr");
    fs::create_directories(tmp / "docs");
    write(tmp / "docs" / "a.md", "Text.");
    write(tmp / "demos.json", "[]");
    auto r = cli({"kb", "build", (tmp / "docs").string(), (tmp / "demos.json").string(), (tmp / "kb").string()});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("catalog.json") != std::string::npos);
    CHECK_FALSE(fs::exists(tmp / "kb"));

    r = cli({"kb", "query", (tmp / "nokb").string(), "x"});
    CHECK(r.code != kExitOk);
    CHECK(cli({"kb", "frobnicate"}).code == kExitConfig);
    CHECK(cli({}).code == kExitConfig);
}

TEST_CASE("run with the oracle mock, a limit and prompt dumps")
{
    oracle::TempDir tmp("clirun");
    const auto r = cli({"run", "--task", "har2", "--mock", oracle_mock().string(), "--kb", shipped_kb_dir().string(),
                        "--limit", "10", "--dump-prompts", (tmp / "prompts").string(), "--out",
                        (tmp / "out").string()});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("har2 [mock] Full: accuracy 1.000 (10 samples, 0 unparseable, 0 failed)") != std::string::npos);

    const auto report = json::parse(slurp(tmp / "out" / "report.json"));
    REQUIRE(report["runs"].size() == 1);
    CHECK(report["runs"][0]["sample_count"] == 10);
    CHECK(report["runs"][0]["metrics"]["accuracy"] == 1.0);
    CHECK(fs::exists(tmp / "out" / "report.md"));

    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(tmp / "prompts" / "har2")) {
        CHECK(e.path().extension() == ".txt");
        ++files;
    }
    CHECK(files == 10);
}

TEST_CASE("run argument and configuration errors")
{
    oracle::TempDir tmp("clierr");
    const auto mock = oracle_mock().string();
    auto r = cli({"run", "--task", "har9", "--mock", mock, "--kb", shipped_kb_dir().string()});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("har9") != std::string::npos);

    r = cli({"run", "--task", "har2", "--mock", mock, "--out", (tmp / "o").string()});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("knowledge base") != std::string::npos);

    r = cli({"run", "--task", "har2", "--mock", (tmp / "absent.json").string()});
    CHECK(r.code == kExitConfig);

    r = cli({"run", "--mock", mock});
    CHECK(r.code == kExitConfig);

    // A key named in the config but missing from the environment stops the run before any request.
    unsetenv("IOTLLM_TEST_CLI_KEY");
    write(tmp / "c.toml", "[paths]\nkb_dir = \"" + shipped_kb_dir().string() +
                              "\"\n[[providers]]\nname = \"remote\"\nbase_url = \"http://127.0.0.1:9\"\n"
                              "model_id = \"m\"\napi_key_env = \"IOTLLM_TEST_CLI_KEY\"\n");
    r = cli({"run", "--task", "har2", "--config", (tmp / "c.toml").string(), "--out", (tmp / "o2").string()});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("IOTLLM_TEST_CLI_KEY") != std::string::npos);
    CHECK_FALSE(fs::exists(tmp / "o2"));

    // The index was built with a 256-dim hash embedder; a different dimension is rejected.
    write(tmp / "e.toml", "[embedder]\nkind = \"remote\"\nbase_url = \"http://127.0.0.1:9\"\nmodel_id = \"e\"\n");
    r = cli({"run", "--task", "har2", "--mock", mock, "--config", (tmp / "e.toml").string(), "--kb",
             shipped_kb_dir().string(), "--out", (tmp / "o3").string()});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("embedder") != std::string::npos);
}

TEST_CASE("failed samples give exit code 3")
{
    oracle::TempDir tmp("clifail");
    write(tmp / "flaky.json", R"({"mode": "oracle", "fail_first": 100})");
    write(tmp / "c.toml", "[ablation]\nsimplify_enrich = false\ndomain_knowledge = false\n"
                          "demonstrations = false\nrole_and_cot = false\n");
    const auto r = cli({"run", "--task", "occupancy", "--mock", (tmp / "flaky.json").string(), "--config",
                        (tmp / "c.toml").string(), "--limit", "2", "--out", (tmp / "o").string()});
    CHECK(r.code == kExitProvider);
    CHECK(r.out.find("2 sample(s) failed") != std::string::npos);
    CHECK(fs::exists(tmp / "o" / "report.json"));
}

TEST_CASE("ablate and report merge")
{
    oracle::TempDir tmp("cliablate");
    const auto mock = oracle_mock().string();
    auto r = cli({"ablate", "--task", "heartbeat,localization", "--mock", mock, "--kb", shipped_kb_dir().string(),
                  "--limit", "4", "--out", (tmp / "a").string()});
    REQUIRE(r.code == kExitOk);
    const auto a = json::parse(slurp(tmp / "a" / "report.json"));
    REQUIRE(a["runs"].size() == 10);
    CHECK(a["runs"][0]["task_id"] == "heartbeat");
    CHECK(a["runs"][0]["setting"] == "Baseline");
    CHECK(a["runs"][4]["setting"] == "Full");
    CHECK(a["runs"][5]["task_id"] == "localization");

    r = cli({"run", "--task", "har2", "--mock", mock, "--kb", shipped_kb_dir().string(), "--limit", "2", "--out",
             (tmp / "b").string()});
    REQUIRE(r.code == kExitOk);
    r = cli({"report", "merge", (tmp / "a" / "report.json").string(), (tmp / "b" / "report.json").string(), "--out",
             (tmp / "m").string()});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("merged 11 run(s)") != std::string::npos);
    const auto m = json::parse(slurp(tmp / "m" / "report.json"));
    CHECK(m["runs"].size() == 11);
    CHECK(m["runs"][0]["task_id"] == "har2");
    const auto md = slurp(tmp / "m" / "report.md");
    CHECK(md.find("Ablation") != std::string::npos);

    r = cli({"report", "merge", (tmp / "missing.json").string(), "--out", (tmp / "n").string()});
    CHECK(r.code == kExitIo);
}
