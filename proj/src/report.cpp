#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <fmt/format.h>

#include "iotllm/error.hpp"
#include "iotllm/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace iotllm {

const char* const kStdDefinition =
    "STD is the population standard deviation of the per-sample Euclidean localization errors (m). "
    "Unparseable regression answers are excluded from RMSE, MAE and STD and counted separately; "
    "unparseable classification answers count as incorrect.";

namespace {

std::size_t task_rank(std::string_view task_id)
{
    const auto& tasks = all_tasks();
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (to_string(tasks[i]) == task_id) {
            return i;
        }
    }
    return tasks.size();
}

std::size_t setting_rank(std::string_view setting)
{
    const auto& ladder = ablation_ladder();
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        if (ladder[i].label == setting) {
            return i;
        }
    }
    return ladder.size();
}

std::string column_title(std::string_view task_id)
{
    static const std::map<std::string, std::string, std::less<>> titles{
        {"har2", "HAR-2cls"},   {"har3", "HAR-3cls"},           {"machine", "Machine"},
        {"heartbeat", "Heartbeat"}, {"occupancy", "Occupancy"}, {"localization", "Localization RMSE (m)"}};
    auto it = titles.find(task_id);
    return it == titles.end() ? std::string(task_id) : it->second;
}

std::string pct(double fraction) { return fmt::format("{:.1f}%", 100.0 * fraction); }
std::string meters(double v) { return fmt::format("{:.3f}", v); }
std::string signed_pct(double v) { return fmt::format("{:+.1f}%", v); }

std::string table_row(const std::vector<std::string>& cells)
{
    std::string out = "|";
    for (const auto& c : cells) {
        out += " " + c + " |";
    }
    return out + "\n";
}

std::string table_head(const std::vector<std::string>& cells)
{
    std::string out = table_row(cells) + "|";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        out += i == 0 ? " :-- |" : " --: |";
    }
    return out + "\n";
}

using Key = std::tuple<std::string, std::string, std::string>;  // model, task, setting

std::map<Key, const EvalResult*> index_runs(const std::vector<EvalResult>& runs)
{
    std::map<Key, const EvalResult*> out;
    for (const auto& r : runs) {
        out[{r.model_id, r.task_id, r.setting}] = &r;  // later runs win
    }
    return out;
}

std::vector<std::string> models_of(const std::vector<EvalResult>& runs)
{
    std::vector<std::string> models;
    for (const auto& r : runs) {
        if (std::find(models.begin(), models.end(), r.model_id) == models.end()) {
            models.push_back(r.model_id);
        }
    }
    return models;
}

std::vector<std::string> settings_of(const std::vector<EvalResult>& runs)
{
    std::vector<std::string> settings;
    for (const auto& r : runs) {
        if (std::find(settings.begin(), settings.end(), r.setting) == settings.end()) {
            settings.push_back(r.setting);
        }
    }
    std::stable_sort(settings.begin(), settings.end(),
                     [](const auto& a, const auto& b) { return setting_rank(a) < setting_rank(b); });
    return settings;
}

std::string improvement_cell(double baseline, double ours, MetricKind kind)
{
    if (baseline <= 0) {
        return "n/a";
    }
    return signed_pct(improvement_pct(baseline, ours, kind));
}

void localization_table(std::string& md, const std::vector<EvalResult>& runs)
{
    std::vector<EvalResult> loc;
    std::copy_if(runs.begin(), runs.end(), std::back_inserter(loc),
                 [](const auto& r) { return r.task_id == "localization"; });
    if (loc.empty()) {
        return;
    }
    const auto models = models_of(loc);
    const auto idx = index_runs(loc);
    md += "## Indoor localization\n\n";
    std::vector<std::string> head{"Setting", "Metric"};
    head.insert(head.end(), models.begin(), models.end());
    md += table_head(head);

    for (const auto& setting : settings_of(loc)) {
        for (const auto* metric : {"RMSE (m)", "MAE (m)", "STD"}) {
            std::vector<std::string> row{setting, metric};
            for (const auto& m : models) {
                auto it = idx.find({m, "localization", setting});
                if (it == idx.end() || !it->second->regression) {
                    row.emplace_back("-");
                    continue;
                }
                const auto& reg = *it->second->regression;
                const double v = metric[0] == 'R' ? reg.rmse_m : metric[0] == 'M' ? reg.mae_m : reg.std_m;
                row.push_back(meters(v));
            }
            md += table_row(row);
        }
    }
    for (const auto* metric : {"RMSE (m)", "MAE (m)"}) {
        std::vector<std::string> row{"Improvement (Full vs Baseline)", metric};
        bool any = false;
        for (const auto& m : models) {
            auto b = idx.find({m, "localization", "Baseline"});
            auto f = idx.find({m, "localization", "Full"});
            if (b == idx.end() || f == idx.end() || !b->second->regression || !f->second->regression) {
                row.emplace_back("-");
                continue;
            }
            any = true;
            const bool rmse = metric[0] == 'R';
            const double base = rmse ? b->second->regression->rmse_m : b->second->regression->mae_m;
            const double ours = rmse ? f->second->regression->rmse_m : f->second->regression->mae_m;
            row.push_back(improvement_cell(base, ours, MetricKind::lower_better));
        }
        if (any) {
            md += table_row(row);
        }
    }
    md += "\n";
}

void accuracy_table(std::string& md, const std::vector<EvalResult>& runs)
{
    std::vector<EvalResult> cls;
    std::copy_if(runs.begin(), runs.end(), std::back_inserter(cls), [](const auto& r) { return r.accuracy.has_value(); });
    if (cls.empty()) {
        return;
    }
    std::vector<std::string> tasks;
    for (auto id : all_tasks()) {
        const std::string t(to_string(id));
        if (std::any_of(cls.begin(), cls.end(), [&](const auto& r) { return r.task_id == t; })) {
            tasks.push_back(t);
        }
    }
    const auto idx = index_runs(cls);
    md += "## Classification accuracy\n\n";
    std::vector<std::string> head{"Model", "Setting"};
    for (const auto& t : tasks) {
        head.push_back(column_title(t));
    }
    md += table_head(head);
    for (const auto& m : models_of(cls)) {
        for (const auto& setting : settings_of(cls)) {
            std::vector<std::string> row{m, setting};
            bool any = false;
            for (const auto& t : tasks) {
                auto it = idx.find({m, t, setting});
                if (it == idx.end()) {
                    row.emplace_back("-");
                } else {
                    any = true;
                    row.push_back(pct(*it->second->accuracy));
                }
            }
            if (any) {
                md += table_row(row);
            }
        }
        std::vector<std::string> row{m, "Improvement (Full vs Baseline)"};
        bool any = false;
        for (const auto& t : tasks) {
            auto b = idx.find({m, t, "Baseline"});
            auto f = idx.find({m, t, "Full"});
            if (b == idx.end() || f == idx.end()) {
                row.emplace_back("-");
                continue;
            }
            any = true;
            row.push_back(improvement_cell(*b->second->accuracy, *f->second->accuracy, MetricKind::higher_better));
        }
        if (any) {
            md += table_row(row);
        }
    }
    md += "\n";
}

void ablation_table(std::string& md, const std::vector<EvalResult>& runs)
{
    const auto idx = index_runs(runs);
    for (const auto& m : models_of(runs)) {
        std::vector<std::string> tasks;
        for (auto id : all_tasks()) {
            const std::string t(to_string(id));
            std::size_t rows = 0;
            for (const auto& step : ablation_ladder()) {
                rows += idx.count({m, t, step.label});
            }
            if (rows >= 2) {
                tasks.push_back(t);
            }
        }
        if (tasks.empty()) {
            continue;
        }
        md += fmt::format("## Ablation ladder ({})\n\n", m);
        std::vector<std::string> head{"Setting"};
        for (const auto& t : tasks) {
            head.push_back(column_title(t));
        }
        md += table_head(head);
        for (const auto& step : ablation_ladder()) {
            std::vector<std::string> row{step.label};
            for (const auto& t : tasks) {
                auto it = idx.find({m, t, step.label});
                if (it == idx.end()) {
                    row.emplace_back("-");
                } else if (it->second->accuracy) {
                    row.push_back(pct(*it->second->accuracy));
                } else if (it->second->regression) {
                    row.push_back(meters(it->second->regression->rmse_m));
                } else {
                    row.emplace_back("n/a");
                }
            }
            md += table_row(row);
        }
        md += "\n";
    }
}

void runs_table(std::string& md, const std::vector<EvalResult>& runs)
{
    md += "## Runs\n\n";
    md += table_head({"Task", "Model", "Setting", "Samples", "Unparseable", "Failed", "Retrieval calls", "Config digest"});
    for (const auto& r : runs) {
        md += table_row({r.task_id, r.model_id, r.setting, std::to_string(r.samples.size()),
                         std::to_string(r.unparseable_count), std::to_string(r.failed_count),
                         std::to_string(r.retrieval_calls), "`" + r.config_digest.substr(0, 16) + "`"});
    }
}

void write_atomically(const fs::path& target, const std::string& content)
{
    const auto tmp = fs::path(target.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        if (!out) {
            throw Error(ErrorCode::io, "cannot write " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        throw Error(ErrorCode::io, "cannot replace " + target.string() + ": " + ec.message());
    }
}

}  // namespace

std::vector<EvalResult> ordered_runs(std::vector<EvalResult> runs)
{
    std::stable_sort(runs.begin(), runs.end(), [](const EvalResult& a, const EvalResult& b) {
        return std::tuple(a.model_id, task_rank(a.task_id), setting_rank(a.setting)) <
               std::tuple(b.model_id, task_rank(b.task_id), setting_rank(b.setting));
    });
    return runs;
}

json report_json(const std::vector<EvalResult>& runs)
{
    json out = {{"format_version", 1}, {"std_definition", kStdDefinition}, {"runs", json::array()}};
    for (const auto& r : ordered_runs(runs)) {
        out["runs"].push_back(to_json(r));
    }
    return out;
}

std::string report_markdown(const std::vector<EvalResult>& runs)
{
    std::string md = "# IoT-LLM evaluation report\n\n";
    md += kStdDefinition;
    md += " Improvement rows compare the Full setting against the Baseline setting of the same model.\n\n";
    localization_table(md, runs);
    accuracy_table(md, runs);
    ablation_table(md, runs);
    runs_table(md, runs);
    return md;
}

void write_report(const std::vector<EvalResult>& runs, const fs::path& out_dir)
{
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw Error(ErrorCode::io, "cannot create " + out_dir.string() + ": " + ec.message());
    }
    write_atomically(out_dir / "report.json", report_json(runs).dump(2) + "\n");
    write_atomically(out_dir / "report.md", report_markdown(runs));
}

std::vector<EvalResult> read_report(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io, "cannot open " + path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::format, path.string() + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("runs") || !j["runs"].is_array()) {
        throw Error(ErrorCode::format, path.string() + ": missing 'runs' array");
    }
    std::vector<EvalResult> runs;
    for (const auto& r : j["runs"]) {
        runs.push_back(eval_result_from_json(r));
    }
    return runs;
}

std::vector<EvalResult> merge_reports(const std::vector<fs::path>& paths)
{
    std::vector<EvalResult> merged;
    for (const auto& p : paths) {
        for (auto& r : read_report(p)) {
            auto same = [&](const EvalResult& e) {
                return e.task_id == r.task_id && e.model_id == r.model_id && e.config_digest == r.config_digest;
            };
            merged.erase(std::remove_if(merged.begin(), merged.end(), same), merged.end());
            merged.push_back(std::move(r));
        }
    }
    return ordered_runs(std::move(merged));
}

}  // namespace iotllm
