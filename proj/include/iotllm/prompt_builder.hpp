#pragma once

#include <optional>
#include <string>
#include <vector>

#include "iotllm/knowledge_base.hpp"

namespace iotllm {

struct RoleDescription {
    std::string task_type;
    std::string text;
};

inline constexpr std::size_t kDefaultPromptBudget = 24000;
inline constexpr std::string_view kTruncationMarker = "[knowledge truncated:";

/// Everything that goes into one prompt. Empty optional sections are omitted
/// from the rendering; the Instruction section is always present.
struct PromptBundle {
    std::optional<RoleDescription> role;
    std::string data_description;
    std::vector<std::string> knowledge;       // retrieval order
    std::vector<std::string> demonstrations;  // already rendered
    std::string task_description;
    std::string cot_instruction;  // empty: no step-by-step request
    std::string answer_hint;      // what <value> stands for, e.g. "one of: N, V"
    std::size_t char_budget = kDefaultPromptBudget;
};

/// The default two-step reasoning instruction: analyze first, then answer.
std::string_view default_cot_instruction();

/// Renders sections in the order Role, Domain Knowledge, Demonstrations,
/// IoT Data Description, Task, Instruction. Over budget, knowledge chunks are
/// dropped from the end (then demonstrations) and a marker notes the cut; data
/// and task are never touched. Throws invalid-argument if they alone exceed the budget.
std::string assemble_prompt(const PromptBundle& bundle);

/// "Question: ...", optional "Analysis: ...", then "Answer: <answer>" as the last line.
std::string render_demonstration(const Demonstration& d);

}  // namespace iotllm
