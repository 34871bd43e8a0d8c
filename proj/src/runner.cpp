#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "iotllm/benchmark.hpp"
#include "iotllm/error.hpp"
#include "iotllm/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace iotllm {

namespace {

SerializationConfig effective_serialization(const TaskSpec& task, const RunContext& ctx)
{
    auto cfg = ctx.serialization;
    if (task.precision_override) {
        cfg.precision_digits = *task.precision_override;
    }
    return cfg;
}

std::string role_text(const TaskSpec& task, const RunContext& ctx)
{
    if (auto it = ctx.roles.find(std::string(to_string(task.id))); it != ctx.roles.end()) {
        return it->second;
    }
    return task.default_role;
}

json flags_json(const AblationConfig& f)
{
    return {{"simplify_enrich", f.simplify_enrich},
            {"domain_knowledge", f.domain_knowledge},
            {"demonstrations", f.demonstrations},
            {"role_and_cot", f.role_and_cot}};
}

std::string safe_file_name(std::string_view id)
{
    std::string out;
    for (char c : id) {
        const bool ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '-' ||
                        c == '_' || c == '.';
        out += ok ? c : '_';
    }
    return out;
}

SampleResult score(const TaskSpec& task, const Sample& sample, const std::string& completion)
{
    SampleResult r;
    r.sample_id = sample.sample_id;
    r.truth = reference_answer(sample.truth);
    if (task.kind == TaskKind::classification) {
        r.parsed = parse_classification(completion, task.labels);
        r.correct = r.parsed.label && *r.parsed.label == std::get<std::string>(sample.truth);
    } else {
        r.parsed = parse_regression(completion);
        if (r.parsed.kind == ParsedAnswer::Kind::coordinates) {
            const auto& p = std::get<Point>(sample.truth);
            r.error_m = std::hypot(*r.parsed.x_m - p.x_m, *r.parsed.y_m - p.y_m);
        }
    }
    return r;
}

}  // namespace

std::string build_sample_prompt(const TaskSpec& task, const Sample& sample, const AblationConfig& flags,
                                const RunContext& ctx)
{
    PromptBundle bundle;
    bundle.char_budget = ctx.prompt_budget;
    bundle.task_description = task.task_description;
    bundle.answer_hint = task.answer_hint;

    if (flags.simplify_enrich) {
        std::optional<StatFeatures> features;
        if (!task.tabular && sample.series.length() >= 2) {
            features = compute_stat_features(sample.series);
        }
        bundle.data_description =
            build_data_description(sample.series, task.context, effective_serialization(task, ctx), features).text;
    } else {
        bundle.data_description = build_raw_description(sample.series).text;
    }

    if (flags.needs_retrieval()) {
        if (ctx.retriever == nullptr) {
            throw Error(ErrorCode::config, "this setting needs a knowledge base but none is loaded");
        }
        const std::string query_text = bundle.data_description + "\n" + task.task_description;
        if (flags.domain_knowledge) {
            Query q{query_text, {}};
            q.filter.data_type = task.data_type;
            bundle.knowledge = ctx.retriever->knowledge(q);
        }
        if (flags.demonstrations) {
            for (const auto& d : ctx.retriever->demonstrations(query_text, to_string(task.id), task.labels)) {
                bundle.demonstrations.push_back(render_demonstration(d));
            }
        }
    }

    if (flags.role_and_cot) {
        bundle.role = RoleDescription{std::string(to_string(task.id)), role_text(task, ctx)};
        bundle.cot_instruction = default_cot_instruction();
    }
    return assemble_prompt(bundle);
}

std::string config_digest(const TaskSpec& task, const AblationConfig& flags, const RunContext& ctx)
{
    const auto ser = effective_serialization(task, ctx);
    json canon = {{"task", to_string(task.id)},
                  {"flags", flags_json(flags)},
                  {"model_id", ctx.model_id},
                  {"prompt_budget", ctx.prompt_budget}};
    if (flags.simplify_enrich) {
        canon["serialization"] = {{"precision_digits", ser.precision_digits},
                                  {"timestep_separator", ser.timestep_separator},
                                  {"intra_number_spacing", ser.intra_number_spacing}};
    }
    if (flags.needs_retrieval()) {
        canon["retrieval"] = {{"n_per_retriever", ctx.retrieval.n_per_retriever},
                              {"top_m", ctx.retrieval.top_m},
                              {"rrf_k", ctx.retrieval.rrf_k},
                              {"bm25_k1", ctx.retrieval.bm25_k1},
                              {"bm25_b", ctx.retrieval.bm25_b}};
    }
    if (flags.role_and_cot) {
        canon["role"] = role_text(task, ctx);
    }
    if (ctx.gateway != nullptr) {
        const auto& p = ctx.gateway->config();
        canon["decoding"] = {{"temperature", p.temperature}, {"max_output_tokens", p.max_output_tokens}};
    }
    return text::sha256_hex(canon.dump());
}

EvalResult run_task(const TaskSpec& task, const std::vector<Sample>& samples, const AblationConfig& flags,
                    const RunContext& ctx)
{
    if (ctx.gateway == nullptr) {
        throw Error(ErrorCode::config, "no LLM provider configured");
    }
    if (flags.needs_retrieval() && ctx.retriever == nullptr) {
        throw Error(ErrorCode::config, fmt::format("setting '{}' needs a knowledge base but none is loaded",
                                                   ablation_label(flags)));
    }
    if (samples.empty()) {
        throw Error(ErrorCode::invalid_argument, "no samples to evaluate");
    }
    if (ctx.dump_prompts_dir) {
        std::error_code ec;
        fs::create_directories(*ctx.dump_prompts_dir, ec);
        if (ec) {
            throw Error(ErrorCode::io, "cannot create " + ctx.dump_prompts_dir->string());
        }
    }

    std::optional<CountingRetriever> counter;
    RunContext local = ctx;
    if (ctx.retriever != nullptr) {
        counter.emplace(*ctx.retriever);
        local.retriever = &*counter;
    }

    std::vector<SampleResult> results(samples.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&] {
        while (!abort) {
            const std::size_t i = next++;
            if (i >= samples.size()) {
                return;
            }
            const auto& sample = samples[i];
            try {
                const auto prompt = build_sample_prompt(task, sample, flags, local);
                if (local.dump_prompts_dir) {
                    std::ofstream out(*local.dump_prompts_dir / (safe_file_name(sample.sample_id) + ".txt"),
                                      std::ios::binary);
                    out << prompt;
                }
                const CompletionRequest request{prompt, i, sample.sample_id, reference_answer(sample.truth)};
                try {
                    const auto completion = local.gateway->complete(request);
                    results[i] = score(task, sample, completion.text);
                    results[i].attempts = completion.attempt_count;
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::transient && e.code() != ErrorCode::provider) {
                        throw;
                    }
                    results[i] = SampleResult{};
                    results[i].sample_id = sample.sample_id;
                    results[i].truth = reference_answer(sample.truth);
                    results[i].failed = true;
                    results[i].failure = e.what();
                    results[i].attempts = e.code() == ErrorCode::transient ? local.gateway->config().max_retries + 1 : 1;
                }
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                }
                abort = true;
            }
        }
    };

    const auto threads = std::clamp<std::size_t>(ctx.parallelism, 1, samples.size());
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }

    EvalResult out;
    out.task_id = std::string(to_string(task.id));
    out.model_id = ctx.model_id;
    out.setting = ablation_label(flags);
    out.flags = flags;
    out.config_digest = config_digest(task, flags, ctx);
    out.retrieval_calls = counter ? counter->calls() : 0;
    for (const auto& r : results) {
        out.failed_count += r.failed ? 1 : 0;
        out.unparseable_count += (!r.failed && r.parsed.kind == ParsedAnswer::Kind::unparseable) ? 1 : 0;
    }
    if (task.kind == TaskKind::classification) {
        out.accuracy = accuracy(results);
    } else {
        std::vector<double> errors;
        for (const auto& r : results) {
            if (r.error_m) {
                errors.push_back(*r.error_m);
            }
        }
        if (!errors.empty()) {
            out.regression = regression_metrics(errors);
        }
    }
    out.samples = std::move(results);
    return out;
}

std::vector<EvalResult> run_ablation(const TaskSpec& task, const std::vector<Sample>& samples, const RunContext& ctx)
{
    std::vector<EvalResult> rows;
    for (const auto& step : ablation_ladder()) {
        RunContext row_ctx = ctx;
        if (ctx.dump_prompts_dir) {
            row_ctx.dump_prompts_dir = *ctx.dump_prompts_dir / safe_file_name(step.label);
        }
        rows.push_back(run_task(task, samples, step.flags, row_ctx));
    }
    return rows;
}

json to_json(const EvalResult& r)
{
    json samples = json::array();
    for (const auto& s : r.samples) {
        json parsed = {{"kind", to_string(s.parsed.kind)}, {"raw_answer_line", s.parsed.raw_answer_line}};
        if (s.parsed.label) {
            parsed["label"] = *s.parsed.label;
        }
        if (s.parsed.x_m) {
            parsed["x_m"] = *s.parsed.x_m;
            parsed["y_m"] = *s.parsed.y_m;
        }
        json item = {{"sample_id", s.sample_id}, {"truth", s.truth},       {"parsed", parsed},
                     {"correct", s.correct},     {"failed", s.failed},     {"attempts", s.attempts}};
        if (s.error_m) {
            item["error_m"] = *s.error_m;
        }
        if (s.failed) {
            item["failure"] = s.failure;
        }
        samples.push_back(std::move(item));
    }

    json metrics = json::object();
    if (r.accuracy) {
        metrics["accuracy"] = *r.accuracy;
    }
    if (r.regression) {
        metrics["rmse_m"] = r.regression->rmse_m;
        metrics["mae_m"] = r.regression->mae_m;
        metrics["std_m"] = r.regression->std_m;
    }
    return {{"task_id", r.task_id},
            {"model_id", r.model_id},
            {"setting", r.setting},
            {"flags", flags_json(r.flags)},
            {"config_digest", r.config_digest},
            {"metrics", metrics},
            {"sample_count", r.samples.size()},
            {"unparseable_count", r.unparseable_count},
            {"failed_count", r.failed_count},
            {"retrieval_calls", r.retrieval_calls},
            {"samples", samples}};
}

EvalResult eval_result_from_json(const json& j)
{
    EvalResult r;
    try {
        r.task_id = j.at("task_id").get<std::string>();
        r.model_id = j.at("model_id").get<std::string>();
        r.setting = j.at("setting").get<std::string>();
        const auto& f = j.at("flags");
        r.flags = {f.at("simplify_enrich").get<bool>(), f.at("domain_knowledge").get<bool>(),
                   f.at("demonstrations").get<bool>(), f.at("role_and_cot").get<bool>()};
        r.config_digest = j.at("config_digest").get<std::string>();
        const auto& m = j.at("metrics");
        if (m.contains("accuracy")) {
            r.accuracy = m.at("accuracy").get<double>();
        }
        if (m.contains("rmse_m")) {
            r.regression = RegressionMetrics{m.at("rmse_m").get<double>(), m.at("mae_m").get<double>(),
                                             m.at("std_m").get<double>()};
        }
        r.unparseable_count = j.value("unparseable_count", std::size_t{0});
        r.failed_count = j.value("failed_count", std::size_t{0});
        r.retrieval_calls = j.value("retrieval_calls", std::size_t{0});
        for (const auto& s : j.value("samples", json::array())) {
            SampleResult sr;
            sr.sample_id = s.at("sample_id").get<std::string>();
            sr.truth = s.value("truth", "");
            sr.correct = s.value("correct", false);
            sr.failed = s.value("failed", false);
            sr.failure = s.value("failure", "");
            sr.attempts = s.value("attempts", 0);
            if (s.contains("error_m")) {
                sr.error_m = s.at("error_m").get<double>();
            }
            const auto& p = s.at("parsed");
            const auto kind = p.value("kind", "unparseable");
            sr.parsed.kind = kind == "label"         ? ParsedAnswer::Kind::label
                             : kind == "coordinates" ? ParsedAnswer::Kind::coordinates
                                                     : ParsedAnswer::Kind::unparseable;
            sr.parsed.raw_answer_line = p.value("raw_answer_line", "");
            if (p.contains("label")) {
                sr.parsed.label = p.at("label").get<std::string>();
            }
            if (p.contains("x_m")) {
                sr.parsed.x_m = p.at("x_m").get<double>();
                sr.parsed.y_m = p.at("y_m").get<double>();
            }
            r.samples.push_back(std::move(sr));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::format, std::string("malformed evaluation result: ") + e.what());
    }
    return r;
}

}  // namespace iotllm
