#include "planguard/planner.hpp"

#include <regex>
#include <sstream>

#include "planguard/inspector.hpp"
#include "reask.hpp"

namespace planguard {

std::string render_toolkit_block(std::span<const ToolSpec> toolkit) {
    std::string out;
    for (const auto& tool : toolkit) {
        out += "- " + tool.name + ": " + tool.description;
        out += " | input fields: " + canonicalize(nlohmann::json(tool.input_schema));
        out += '\n';
    }
    if (out.empty()) out = "(no tools)\n";
    return out;
}

std::string render_regulations_block(std::span<const ScoredRegulation> regulations) {
    std::string out = "Safety regulations to follow:\n";
    int i = 1;
    for (const auto& sr : regulations) {
        out += std::to_string(i++) + ". [" + sr.regulation.id + "] " +
               sr.regulation.text + '\n';
    }
    return out;
}

std::string render_trajectory_block(const Trajectory& t) {
    if (t.steps.empty()) return "(no steps yet)";
    std::string out;
    for (const auto& step : t.steps) {
        const std::string i = std::to_string(step.index);
        out += "Action " + i + ": " + step.action.tool + '\n';
        out += "Action " + i + " Input: " + canonicalize(step.action.input) + '\n';
        if (step.observation) {
            out += "Observation: " + canonicalize(*step.observation) + '\n';
        }
    }
    if (!out.empty() && out.back() == '\n') out.pop_back();
    return out;
}

PlannerPrompt make_planner_prompt(const Scenario& s, const Trajectory& t,
                                  std::span<const ScoredRegulation> regulations,
                                  const PromptLibrary& prompts) {
    PlannerPrompt p;
    p.system = prompts.planner_system;
    p.instruction = s.instruction;
    p.toolkit_block = render_toolkit_block(s.toolkit);
    if (!regulations.empty()) {
        p.regulations_block = render_regulations_block(regulations);
    }
    p.trajectory_block = render_trajectory_block(t);
    p.step_index = static_cast<int>(t.steps.size());
    return p;
}

std::vector<ChatMessage> render_prompt(const PlannerPrompt& p,
                                       const PromptLibrary& prompts) {
    // The regulations block, when present, sits before the trajectory block.
    std::string regulations;
    if (p.regulations_block) regulations = *p.regulations_block + "\n";
    const std::string user =
        fill_template(prompts.planner_user,
                      {{"instruction", p.instruction},
                       {"toolkit", p.toolkit_block},
                       {"regulations", regulations},
                       {"trajectory", p.trajectory_block},
                       {"step_index", std::to_string(p.step_index)}});
    return {{Role::System, p.system}, {Role::User, user}};
}

namespace {

const std::regex kActionLine(R"(^\s*Action\s+(\d+)\s*:\s*(\S+)\s*$)");
const std::regex kFinalLine(R"(^\s*Final Answer\s*:\s*)");

std::string trim(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

PlannerOutput parse_planner_output(const std::string& text) {
    // Final sentinel first: scan line starts.
    {
        std::istringstream in(text);
        std::string line;
        size_t offset = 0;
        while (std::getline(in, line)) {
            std::smatch m;
            if (std::regex_search(line, m, kFinalLine) && m.position(0) == 0) {
                const size_t start = offset + static_cast<size_t>(m.length(0));
                PlannerOutput out;
                out.kind = PlannerOutput::Kind::Final;
                out.final_answer = trim(std::string_view(text).substr(start));
                return out;
            }
            offset += line.size() + 1;
        }
    }

    std::istringstream in(text);
    std::string line;
    size_t offset = 0;
    while (std::getline(in, line)) {
        std::smatch m;
        if (std::regex_match(line, m, kActionLine)) {
            const std::string index = m[1].str();
            const std::string tool = m[2].str();
            const std::string rationale = trim(std::string_view(text).substr(0, offset));

            // The matching input line must follow.
            const std::regex input_line("^\\s*Action\\s+" + index +
                                        "\\s+Input\\s*:\\s*");
            size_t rest_offset = offset + line.size() + 1;
            std::string next;
            while (std::getline(in, next)) {
                std::smatch im;
                if (std::regex_search(next, im, input_line) && im.position(0) == 0) {
                    auto doc = extract_document(
                        std::string_view(text).substr(rest_offset + im.length(0)));
                    if (!doc) {
                        throw ParseError("action input document is malformed", true);
                    }
                    PlannerOutput out;
                    out.kind = PlannerOutput::Kind::NextStep;
                    out.action = Action{tool, *doc};
                    if (!rationale.empty()) out.rationale = rationale;
                    return out;
                }
                rest_offset += next.size() + 1;
            }
            throw ParseError("action line for step " + index + " has no input line");
        }
        offset += line.size() + 1;
    }
    throw ParseError("completion holds neither an action line nor a final answer");
}

namespace {

PlannerOutput ask_planner(Gateway& gateway, std::vector<ChatMessage> messages,
                          const PromptLibrary& prompts, const std::string& model) {
    ChatRequest req;
    req.model = model;
    req.tag = CallTag::Planner;
    req.messages = std::move(messages);

    auto result = detail::ask_with_reask<PlannerOutput>(
        gateway, req, prompts.reask_note,
        [](const std::string& reply) -> std::optional<PlannerOutput> {
            try {
                return parse_planner_output(reply);
            } catch (const ParseError&) {
                return std::nullopt;
            }
        });
    if (!result.value) {
        // Surface the reason from the final reply.
        return parse_planner_output(result.last_reply);
    }
    return *result.value;
}

}  // namespace

PlannerOutput propose_next_step(Gateway& gateway, const PlannerPrompt& prompt,
                                const PromptLibrary& prompts, const std::string& model) {
    return ask_planner(gateway, render_prompt(prompt, prompts), prompts, model);
}

PlannerOutput propose_revision(Gateway& gateway, const PlannerPrompt& prompt,
                               const Action& rejected, const ComplianceVerdict& feedback,
                               const PromptLibrary& prompts, const std::string& model) {
    std::vector<ChatMessage> messages = render_prompt(prompt, prompts);
    const std::string i = std::to_string(prompt.step_index);
    messages.push_back({Role::Assistant,
                        "Action " + i + ": " + rejected.tool + "\nAction " + i +
                            " Input: " + canonicalize(rejected.input)});
    std::string violated;
    for (const auto& id : feedback.violated_ids) {
        if (!violated.empty()) violated += ", ";
        violated += id;
    }
    if (violated.empty()) violated = "(none listed)";
    messages.push_back(
        {Role::User,
         fill_template(prompts.revision_user,
                       {{"step_index", i},
                        {"tool", rejected.tool},
                        {"input", canonicalize(rejected.input)},
                        {"verdict", to_string(feedback.verdict)},
                        {"violated", violated},
                        {"explanation", feedback.explanation}})});
    return ask_planner(gateway, std::move(messages), prompts, model);
}

}  // namespace planguard
