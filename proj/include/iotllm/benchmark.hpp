#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "iotllm/llm_gateway.hpp"
#include "iotllm/prompt_builder.hpp"
#include "iotllm/retrieval.hpp"
#include "iotllm/sensor_preprocess.hpp"

// The five-task sensory benchmark: task definitions, CSV loaders, seeded
// synthetic generators, metrics, the evaluation runner and the ablation ladder.
namespace iotllm {

enum class TaskId { har2, har3, machine, heartbeat, occupancy, localization };
enum class TaskKind { classification, regression };

std::string_view to_string(TaskId id);
TaskId task_from_string(std::string_view s);
const std::vector<TaskId>& all_tasks();

struct TaskSpec {
    TaskId id = TaskId::har2;
    TaskKind kind = TaskKind::classification;
    std::vector<std::string> labels;  // classification only
    std::string data_type;            // knowledge-base metadata tag
    std::string dataset_file;         // file name inside the data directory
    double source_rate_hz = 1.0;      // rate of the raw recording
    std::size_t downsample_factor = 1;
    bool tabular = false;  // one row of summary values instead of a time series
    std::optional<int> precision_override;
    CollectionContext context;
    std::string task_description;
    std::string default_role;
    std::string answer_hint;
};

const TaskSpec& task_spec(TaskId id);

struct Point {
    double x_m = 0;
    double y_m = 0;

    bool operator==(const Point&) const = default;
};

using GroundTruth = std::variant<std::string, Point>;

struct Sample {
    std::string sample_id;
    TimeSeries series;
    GroundTruth truth;
};

/// Reference answer text as a perfect model would write it after "Answer: ".
std::string reference_answer(const GroundTruth& truth);

struct LoadReport {
    std::vector<Sample> samples;
    std::size_t skipped_unknown_label = 0;
};

/// Reads `path` (a CSV file, or a directory holding the task's dataset file).
/// Rows with labels outside the task's label set are skipped and counted.
LoadReport load_dataset(const TaskSpec& task, const std::filesystem::path& path);

/// Seeded, label-balanced samples (label i % L for sample i). Localization
/// points lie on a 10 m x 10 m integer grid with RSSI from four corner anchors.
std::vector<Sample> generate_synthetic(const TaskSpec& task, std::size_t count, std::uint64_t seed);

/// Corner anchors used by the synthetic localization generator.
const std::vector<Point>& localization_anchors();
/// Noise-free log-distance RSSI (dBm) at `p` from `anchor`.
double rssi_model(const Point& p, const Point& anchor);

// --- metrics -------------------------------------------------------------------

struct SampleResult {
    std::string sample_id;
    ParsedAnswer parsed;
    std::string truth;  // reference answer text
    bool correct = false;
    std::optional<double> error_m;
    bool failed = false;  // provider gave up after retries
    std::string failure;
    int attempts = 0;
};

struct RegressionMetrics {
    double rmse_m = 0;
    double mae_m = 0;
    double std_m = 0;  // population std of per-sample Euclidean errors
};

/// correct / total; unparseable and failed samples count as incorrect.
double accuracy(const std::vector<SampleResult>& results);
RegressionMetrics regression_metrics(const std::vector<double>& errors_m);

enum class MetricKind { higher_better, lower_better };
double improvement_pct(double baseline, double ours, MetricKind kind);

// --- ablation ------------------------------------------------------------------

struct AblationConfig {
    bool simplify_enrich = true;
    bool domain_knowledge = true;
    bool demonstrations = true;
    bool role_and_cot = true;

    bool needs_retrieval() const { return domain_knowledge || demonstrations; }
    bool operator==(const AblationConfig&) const = default;
};

struct AblationStep {
    std::string label;
    AblationConfig flags;
};

/// Baseline, +simplification, +domain knowledge, +demonstrations, Full.
const std::vector<AblationStep>& ablation_ladder();
/// Ladder label for `flags`, or "Custom" when it is not a ladder row.
std::string ablation_label(const AblationConfig& flags);

// --- runner --------------------------------------------------------------------

struct RunContext {
    const LlmGateway* gateway = nullptr;
    Retriever* retriever = nullptr;  // required when the flags need retrieval
    SerializationConfig serialization;
    RetrievalConfig retrieval;  // recorded in the config digest
    std::map<std::string, std::string> roles;  // task id -> role text override
    std::size_t prompt_budget = kDefaultPromptBudget;
    std::optional<std::filesystem::path> dump_prompts_dir;
    std::size_t parallelism = 1;
    std::string model_id;
};

struct EvalResult {
    std::string task_id;
    std::string model_id;
    std::string setting;  // ablation label
    AblationConfig flags;
    std::vector<SampleResult> samples;
    std::optional<double> accuracy;
    std::optional<RegressionMetrics> regression;
    std::size_t unparseable_count = 0;
    std::size_t failed_count = 0;
    std::size_t retrieval_calls = 0;
    std::string config_digest;
};

/// The prompt run_task sends for one sample. Counts retrieval through `ctx.retriever`.
std::string build_sample_prompt(const TaskSpec& task, const Sample& sample, const AblationConfig& flags,
                                const RunContext& ctx);

/// Digest over everything that shapes prompts and decoding for a run.
std::string config_digest(const TaskSpec& task, const AblationConfig& flags, const RunContext& ctx);

EvalResult run_task(const TaskSpec& task, const std::vector<Sample>& samples, const AblationConfig& flags,
                    const RunContext& ctx);

/// The five ladder rows in order.
std::vector<EvalResult> run_ablation(const TaskSpec& task, const std::vector<Sample>& samples,
                                     const RunContext& ctx);

nlohmann::json to_json(const EvalResult& r);
EvalResult eval_result_from_json(const nlohmann::json& j);

}  // namespace iotllm
