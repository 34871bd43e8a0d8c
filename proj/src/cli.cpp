#include <filesystem>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "iotllm/benchmark.hpp"
#include "iotllm/cli.hpp"
#include "iotllm/error.hpp"
#include "iotllm/knowledge_base.hpp"
#include "iotllm/report.hpp"
#include "iotllm/run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace iotllm {

namespace {

struct RunOptions {
    std::vector<std::string> tasks;
    std::string config;
    std::string provider;
    std::string mock;
    std::size_t limit = 0;
    std::string dump_prompts;
    std::string out;
    std::string kb_dir;
    std::string data_dir;
    std::int64_t seed = -1;
};

int exit_code_for(ErrorCode code)
{
    switch (code) {
    case ErrorCode::io: return kExitIo;
    case ErrorCode::transient:
    case ErrorCode::provider: return kExitProvider;
    default: return kExitConfig;
    }
}

RunConfig load_config_or_default(const std::string& path)
{
    return path.empty() ? RunConfig{} : load_run_config(path);
}

std::vector<TaskId> selected_tasks(const std::vector<std::string>& names)
{
    std::vector<TaskId> out;
    for (const auto& n : names) {
        if (n == "all") {
            return all_tasks();
        }
        const auto id = task_from_string(n);
        if (std::find(out.begin(), out.end(), id) == out.end()) {
            out.push_back(id);
        }
    }
    if (out.empty()) {
        throw Error(ErrorCode::config, "no task selected");
    }
    return out;
}

/// Embedder matching the persisted index; a mismatch is a configuration error.
std::shared_ptr<const EmbeddingProvider> embedder_for(const RunConfig& cfg, const KBIndex& index)
{
    auto settings = cfg.embedder;
    if (settings.kind == "hash") {
        settings.dimension = index.dimension;
    }
    std::shared_ptr<const EmbeddingProvider> e = make_embedder(settings);
    if (e->id() != index.embedder_id) {
        throw Error(ErrorCode::config, fmt::format("knowledge base was built with embedder '{}' but the config "
                                                   "selects '{}'",
                                                   index.embedder_id, e->id()));
    }
    return e;
}

std::string summary_line(const EvalResult& r)
{
    std::string metric;
    if (r.accuracy) {
        metric = fmt::format("accuracy {:.3f}", *r.accuracy);
    } else if (r.regression) {
        metric = fmt::format("rmse {:.3f} m, mae {:.3f} m, std {:.3f} m", r.regression->rmse_m, r.regression->mae_m,
                             r.regression->std_m);
    } else {
        metric = "no parseable answers";
    }
    return fmt::format("{} [{}] {}: {} ({} samples, {} unparseable, {} failed)", r.task_id, r.model_id, r.setting,
                       metric, r.samples.size(), r.unparseable_count, r.failed_count);
}

int execute_run(const RunOptions& o, bool ablate, std::ostream& out)
{
    auto cfg = load_config_or_default(o.config);
    if (!o.kb_dir.empty()) {
        cfg.kb_dir = o.kb_dir;
    }
    if (!o.data_dir.empty()) {
        cfg.data_dir = o.data_dir;
    }
    if (!o.out.empty()) {
        cfg.out_dir = o.out;
    }
    if (o.seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(o.seed);
    }

    ProviderConfig provider;
    if (!o.mock.empty()) {
        provider.name = "mock";
        provider.kind = "mock";
        provider.model_id = "mock";
        provider.mock_file = o.mock;
        if (!fs::exists(provider.mock_file)) {
            throw Error(ErrorCode::config, "mock file '" + o.mock + "' does not exist");
        }
    } else {
        provider = select_provider(cfg, o.provider.empty() ? std::nullopt : std::optional(o.provider));
    }
    provider.validate();
    validate_paths(cfg);

    const auto tasks = selected_tasks(o.tasks);
    const bool needs_kb = ablate || cfg.ablation.needs_retrieval();
    if (needs_kb && !cfg.kb_dir) {
        throw Error(ErrorCode::config, fmt::format("setting '{}' needs a knowledge base; set [paths] kb_dir or --kb",
                                                   ablate ? "Full" : ablation_label(cfg.ablation)));
    }

    // Everything that can fail on input is loaded before the first request.
    std::vector<std::pair<TaskId, std::vector<Sample>>> work;
    for (auto id : tasks) {
        const auto& spec = task_spec(id);
        std::vector<Sample> samples;
        if (cfg.data_dir) {
            samples = load_dataset(spec, *cfg.data_dir).samples;
        } else {
            const std::size_t per = spec.kind == TaskKind::classification ? spec.labels.size() : 1;
            samples = generate_synthetic(spec, cfg.per_label * per, cfg.seed);
        }
        if (o.limit > 0 && samples.size() > o.limit) {
            samples.erase(samples.begin() + static_cast<std::ptrdiff_t>(o.limit), samples.end());
        }
        work.emplace_back(id, std::move(samples));
    }

    std::shared_ptr<const KBIndex> index;
    std::unique_ptr<IndexRetriever> retriever;
    if (needs_kb) {
        index = std::make_shared<const KBIndex>(load(*cfg.kb_dir));
        std::shared_ptr<const Reranker> reranker = make_reranker(cfg.reranker);
        retriever = std::make_unique<IndexRetriever>(index, embedder_for(cfg, *index), cfg.retrieval, reranker);
    }

    LlmGateway gateway(make_provider(provider), provider);
    RunContext ctx;
    ctx.gateway = &gateway;
    ctx.retriever = retriever.get();
    ctx.serialization = cfg.serialization;
    ctx.retrieval = cfg.retrieval;
    ctx.roles = cfg.roles;
    ctx.prompt_budget = cfg.prompt_budget;
    ctx.parallelism = static_cast<std::size_t>(provider.parallelism_limit);
    ctx.model_id = provider.model_id.empty() ? provider.name : provider.model_id;

    std::vector<EvalResult> runs;
    for (const auto& [id, samples] : work) {
        const auto& spec = task_spec(id);
        RunContext task_ctx = ctx;
        if (!o.dump_prompts.empty()) {
            task_ctx.dump_prompts_dir = fs::path(o.dump_prompts) / std::string(to_string(id));
        }
        if (ablate) {
            for (auto& r : run_ablation(spec, samples, task_ctx)) {
                runs.push_back(std::move(r));
            }
        } else {
            runs.push_back(run_task(spec, samples, cfg.ablation, task_ctx));
        }
    }

    runs = ordered_runs(std::move(runs));
    write_report(runs, cfg.out_dir);
    std::size_t failed = 0;
    for (const auto& r : runs) {
        out << summary_line(r) << "\n";
        failed += r.failed_count;
    }
    out << "report: " << (cfg.out_dir / "report.json").string() << "\n";
    if (failed > 0) {
        out << failed << " sample(s) failed after retries\n";
        return kExitProvider;
    }
    return kExitOk;
}

int execute_kb_build(const std::string& docs_dir, const std::string& demos_file, const std::string& out_dir,
                     const std::string& embedder_kind, const std::string& config, std::ostream& out)
{
    auto cfg = load_config_or_default(config);
    if (!embedder_kind.empty()) {
        cfg.embedder.kind = embedder_kind;
    }
    const auto docs = load_source_documents(docs_dir);
    const auto demos = load_demonstrations(demos_file);
    const auto embedder = make_embedder(cfg.embedder);
    const auto index = build_index(docs, demos, *embedder);
    persist(index, out_dir);
    out << fmt::format("chunks: {}\ndemos: {}\nembedder: {}\n", index.chunks.size(), index.demos.size(),
                       index.embedder_id);
    return kExitOk;
}

int execute_kb_query(const std::string& kb_dir, const std::string& text, const std::string& data_type,
                     const std::string& task_type, const std::string& mode, std::size_t n, const std::string& config,
                     std::ostream& out)
{
    const auto cfg = load_config_or_default(config);
    const auto index = load(kb_dir);
    const auto embedder = embedder_for(cfg, index);
    Query q{text, {}};
    if (!data_type.empty()) {
        q.filter.data_type = data_type;
    }
    if (!task_type.empty()) {
        q.filter.task_type = task_type;
    }
    auto retrieval = cfg.retrieval;
    if (n > 0) {
        retrieval.n_per_retriever = n;
        retrieval.top_m = std::min(retrieval.top_m, 2 * n);
    }
    std::vector<ScoredChunk> hits;
    if (mode == "sparse") {
        hits = sparse_retrieve(index, q, retrieval.n_per_retriever, retrieval);
    } else if (mode == "dense") {
        hits = dense_retrieve(index, q, retrieval.n_per_retriever, *embedder);
    } else {
        const auto reranker = make_reranker(cfg.reranker);
        hits = hybrid_retrieve(index, q, retrieval, *embedder, reranker.get());
    }
    for (const auto& h : hits) {
        out << json{{"chunk_id", h.chunk_id}, {"score", h.score}, {"source", to_string(h.source)}}.dump() << "\n";
    }
    return kExitOk;
}

void add_run_options(CLI::App* cmd, RunOptions& o)
{
    cmd->add_option("--task", o.tasks, "Task id(s): har2, har3, machine, heartbeat, occupancy, localization or all")
        ->required()
        ->delimiter(',');
    cmd->add_option("--config", o.config, "TOML run configuration");
    cmd->add_option("--provider", o.provider, "Provider name from the config");
    cmd->add_option("--mock", o.mock, "Use the offline mock provider described by this JSON file");
    cmd->add_option("--limit", o.limit, "Evaluate at most N samples per task");
    cmd->add_option("--dump-prompts", o.dump_prompts, "Write every rendered prompt under this directory");
    cmd->add_option("--out", o.out, "Report directory (overrides [paths] out_dir)");
    cmd->add_option("--kb", o.kb_dir, "Knowledge base directory (overrides [paths] kb_dir)");
    cmd->add_option("--data", o.data_dir, "Dataset directory (overrides [paths] data_dir)");
    cmd->add_option("--seed", o.seed, "Seed for synthetic samples");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Sensor-data reasoning with LLMs: knowledge base, evaluation runs and reports"};
    app.name("iotllm");
    app.require_subcommand(1);

    auto* kb = app.add_subcommand("kb", "Knowledge base commands");
    kb->require_subcommand(1);
    std::string docs_dir, demos_file, kb_out, embedder_kind, kb_config;
    auto* kb_build = kb->add_subcommand("build", "Chunk, embed and persist a knowledge base");
    kb_build->add_option("docs_dir", docs_dir, "Directory holding catalog.json and the documents")->required();
    kb_build->add_option("demos_file", demos_file, "JSON array of demonstrations")->required();
    kb_build->add_option("out_dir", kb_out, "Index directory to create or replace")->required();
    kb_build->add_option("--embedder", embedder_kind, "hash or remote")->check(CLI::IsMember({"hash", "remote"}));
    kb_build->add_option("--config", kb_config, "TOML configuration ([embedder] section)");

    std::string query_kb, query_text, query_data_type, query_task_type, query_mode = "hybrid", query_config;
    std::size_t query_n = 0;
    auto* kb_query = kb->add_subcommand("query", "Print retrieval results as JSON lines");
    kb_query->add_option("kb_dir", query_kb, "Index directory")->required();
    kb_query->add_option("text", query_text, "Query text")->required();
    kb_query->add_option("--data-type", query_data_type, "Metadata filter on data_type");
    kb_query->add_option("--task-type", query_task_type, "Metadata filter on task_type");
    kb_query->add_option("--mode", query_mode, "hybrid, sparse or dense")
        ->check(CLI::IsMember({"hybrid", "sparse", "dense"}));
    kb_query->add_option("-n", query_n, "Candidates per retriever");
    kb_query->add_option("--config", query_config, "TOML configuration");

    RunOptions run_opts;
    auto* run = app.add_subcommand("run", "Evaluate tasks under the configured ablation flags");
    add_run_options(run, run_opts);

    RunOptions ablate_opts;
    auto* ablate = app.add_subcommand("ablate", "Evaluate tasks under all five ablation settings");
    add_run_options(ablate, ablate_opts);

    std::vector<std::string> merge_inputs;
    std::string merge_out;
    auto* report = app.add_subcommand("report", "Report commands");
    report->require_subcommand(1);
    auto* merge = report->add_subcommand("merge", "Combine report.json files into one report");
    merge->add_option("inputs", merge_inputs, "report.json files")->required();
    merge->add_option("--out", merge_out, "Output directory")->required();

    std::vector<const char*> argv{"iotllm"};
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (kb_build->parsed()) {
            return execute_kb_build(docs_dir, demos_file, kb_out, embedder_kind, kb_config, out);
        }
        if (kb_query->parsed()) {
            return execute_kb_query(query_kb, query_text, query_data_type, query_task_type, query_mode, query_n,
                                    query_config, out);
        }
        if (run->parsed()) {
            return execute_run(run_opts, false, out);
        }
        if (ablate->parsed()) {
            return execute_run(ablate_opts, true, out);
        }
        if (merge->parsed()) {
            std::vector<fs::path> inputs(merge_inputs.begin(), merge_inputs.end());
            const auto runs = merge_reports(inputs);
            write_report(runs, merge_out);
            out << fmt::format("merged {} run(s) into {}\n", runs.size(), (fs::path(merge_out) / "report.json").string());
            return kExitOk;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitConfig;
}

}  // namespace iotllm
