#pragma once

// Drives the backbone model to propose one step at a time in the two-line
// action format, with optional regulation injection and revision prompting
// after inspector feedback.
//
//   Action <i>: <ToolName>
//   Action <i> Input: <JSON object>
//   ...
//   Final Answer: <text>

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "planguard/domain.hpp"
#include "planguard/gateway.hpp"
#include "planguard/prompts.hpp"
#include "planguard/retrieval.hpp"

namespace planguard {

struct ComplianceVerdict;  // inspector.hpp

struct StrategyFlags {
    bool in_planning = false;
    bool post_inspection = false;
    bool hindsight_assembly = false;
};

struct PlannerPrompt {
    std::string system;
    std::string instruction;
    std::string toolkit_block;
    std::optional<std::string> regulations_block;  // present iff in-planning injection fired
    std::string trajectory_block;
    int step_index = 0;
};

std::string render_toolkit_block(std::span<const ToolSpec> toolkit);
std::string render_regulations_block(std::span<const ScoredRegulation> regulations);

// One step renders as three lines: "Action i: name", "Action i Input:
// <canonical>", "Observation: <canonical>" (observation line only when
// present). An empty trajectory renders as "(no steps yet)".
std::string render_trajectory_block(const Trajectory& t);

PlannerPrompt make_planner_prompt(const Scenario& s, const Trajectory& t,
                                  std::span<const ScoredRegulation> regulations,
                                  const PromptLibrary& prompts);

std::vector<ChatMessage> render_prompt(const PlannerPrompt& p,
                                       const PromptLibrary& prompts);

struct PlannerOutput {
    enum class Kind { NextStep, Final };
    Kind kind = Kind::Final;
    std::optional<std::string> rationale;  // NextStep only
    std::optional<Action> action;          // NextStep only
    std::string final_answer;              // Final only
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& message, bool bad_input = false)
        : Error(message), bad_input_(bad_input) {}
    bool bad_input() const { return bad_input_; }

private:
    bool bad_input_;
};

// "Final Answer:" wins when present; otherwise the first "Action <i>:" line
// plus its "Action <i> Input:" document. Free text before the action lines
// becomes the rationale. Throws ParseError (bad_input when the action line
// exists but its input document is malformed).
PlannerOutput parse_planner_output(const std::string& text);

// One gateway exchange plus one re-ask on ParseError.
PlannerOutput propose_next_step(Gateway& gateway, const PlannerPrompt& prompt,
                                const PromptLibrary& prompts, const std::string& model);

// Revision request after an unsafe verdict: the base prompt, the rejected
// action as an assistant turn, and the inspector feedback as a user turn.
PlannerOutput propose_revision(Gateway& gateway, const PlannerPrompt& prompt,
                               const Action& rejected, const ComplianceVerdict& feedback,
                               const PromptLibrary& prompts, const std::string& model);

}  // namespace planguard
