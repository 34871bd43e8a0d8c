#include "iotllm/prompt_builder.hpp"

#include <fmt/format.h>

#include "iotllm/error.hpp"

namespace iotllm {

std::string_view default_cot_instruction()
{
    return "Work in two steps. First, analyze the IoT data and the task: describe the patterns you observe in "
           "the data, relate them to the physical meaning of each channel and to the domain knowledge above, and "
           "reason about which outcome they indicate. Second, give the final answer based on this analysis.";
}

namespace {

std::string render(const PromptBundle& b, std::size_t knowledge_kept, std::size_t demos_kept)
{
    std::string out;
    auto section = [&out](std::string_view title, std::string_view body) {
        while (!body.empty() && body.back() == '\n') {
            body.remove_suffix(1);
        }
        if (!out.empty()) {
            out += "\n";
        }
        out += fmt::format("### {}\n{}\n", title, body);
    };

    if (b.role) {
        section("Role", b.role->text);
    }

    if (!b.knowledge.empty()) {
        std::string body;
        for (std::size_t i = 0; i < knowledge_kept; ++i) {
            body += fmt::format("{}. {}\n", i + 1, b.knowledge[i]);
        }
        if (knowledge_kept < b.knowledge.size()) {
            body += fmt::format("{} {} of {} chunks omitted]\n", kTruncationMarker,
                                b.knowledge.size() - knowledge_kept, b.knowledge.size());
        }
        body.pop_back();
        section("Domain Knowledge", body);
    }

    if (demos_kept > 0) {
        std::string body;
        for (std::size_t i = 0; i < demos_kept; ++i) {
            if (i > 0) {
                body += "\n\n";
            }
            body += fmt::format("Example {}:\n{}", i + 1, b.demonstrations[i]);
        }
        section("Demonstrations", body);
    }

    section("IoT Data Description", b.data_description);
    section("Task", b.task_description);

    std::string instruction;
    if (!b.cot_instruction.empty()) {
        instruction = b.cot_instruction + "\n";
    }
    instruction += "End your response with a final line of the exact form \"Answer: <value>\"";
    if (!b.answer_hint.empty()) {
        instruction += fmt::format(", where <value> is {}", b.answer_hint);
    }
    instruction += ".";
    section("Instruction", instruction);
    return out;
}

}  // namespace

std::string assemble_prompt(const PromptBundle& bundle)
{
    std::size_t knowledge_kept = bundle.knowledge.size();
    std::size_t demos_kept = bundle.demonstrations.size();
    auto prompt = render(bundle, knowledge_kept, demos_kept);
    while (prompt.size() > bundle.char_budget) {
        if (knowledge_kept > 0) {
            --knowledge_kept;
        } else if (demos_kept > 0) {
            --demos_kept;
        } else {
            throw Error(ErrorCode::invalid_argument,
                        fmt::format("prompt needs {} characters without knowledge or demonstrations, budget is {}",
                                    prompt.size(), bundle.char_budget));
        }
        prompt = render(bundle, knowledge_kept, demos_kept);
    }
    return prompt;
}

std::string render_demonstration(const Demonstration& d)
{
    std::string out = "Question: " + d.question + "\n";
    if (!d.analysis.empty()) {
        out += "Analysis: " + d.analysis + "\n";
    }
    out += "Answer: " + d.answer;
    return out;
}

}  // namespace iotllm
