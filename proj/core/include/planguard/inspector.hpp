#pragma once

// Post-planning safety inspection: judge the relevance of each retrieved
// regulation, judge compliance of the candidate step against the relevant
// ones, feed criticism back to the planner for revision, and halt when the
// planner repeats a rejected step or exhausts the round budget.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "planguard/constitution.hpp"
#include "planguard/domain.hpp"
#include "planguard/gateway.hpp"
#include "planguard/planner.hpp"
#include "planguard/prompts.hpp"
#include "planguard/retrieval.hpp"

namespace planguard {

class MalformedVerdict : public Error {
public:
    explicit MalformedVerdict(const std::string& message) : Error(message) {}
};

struct RelevanceJudgment {
    std::string regulation_id;
    bool relevant = false;
    std::string reason;  // always non-empty; synthesized on fail-closed parses
};

enum class Verdict { Safe, Unsafe };

std::string to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);

struct ComplianceVerdict {
    Verdict verdict = Verdict::Safe;
    std::vector<std::string> violated_ids;  // non-empty iff unsafe
    std::string explanation;
    std::string request_hash;  // gateway exchange ref; empty for synthesized verdicts
};

// One revision cycle: the rejected candidate, the unsafe verdict that
// rejected it, the relevance judgments of that cycle, and the planner's
// replacement (absent when the outcome halted on this round).
struct RevisionRound {
    int round = 1;
    Action rejected_step;
    std::string rejected_canonical;
    ComplianceVerdict feedback;
    std::vector<RelevanceJudgment> relevance;
    std::optional<Regulation> violated_regulation;  // first violated id, resolved
    std::optional<Action> revised;
};

struct AcceptedStep {
    Action action;
    ComplianceVerdict verdict;  // always safe
    std::vector<RelevanceJudgment> relevance;
    std::optional<Regulation> top_relevant;  // highest-ranked relevant regulation
};

struct InspectionOutcome {
    std::optional<AcceptedStep> accepted;
    std::vector<RevisionRound> rounds;
    bool halted = false;
    std::optional<HaltReason> halt_reason;  // RepeatedMistake or RoundBudget
    std::optional<std::string> error;       // recorded malformed-verdict failures

    // Every action the inspection refused: each round's rejected step, plus
    // the repeated action sitting in the last round's `revised` slot when the
    // outcome halted on RepeatedMistake.
    std::vector<Action> rejected_actions() const;
};

struct InspectorConfig {
    int max_rounds = 3;
    Comparator comparator = Comparator::NameAndInput;
    std::string model = "inspector";
    PromptLibrary prompts = PromptLibrary::builtin();
};

// One gateway exchange with a yes/no structured reply; one re-ask on parse
// failure, then fail-closed to relevant=true.
RelevanceJudgment judge_relevance(Gateway& gateway, const Action& step,
                                  const Trajectory& t, const Regulation& reg,
                                  const PromptLibrary& prompts = PromptLibrary::builtin(),
                                  const std::string& model = "inspector");

// Empty relevant_regs short-circuits to a safe verdict without a gateway
// call. An unsafe reply must cite at least one regulation that was judged
// relevant in the same cycle; anything else is MalformedVerdict after the
// re-ask.
ComplianceVerdict judge_compliance(Gateway& gateway, const Action& step,
                                   const Trajectory& t,
                                   std::span<const Regulation> relevant_regs,
                                   const PromptLibrary& prompts = PromptLibrary::builtin(),
                                   const std::string& model = "inspector");

// Asked for a replacement step after an unsafe verdict. Round is 1-based.
using Reviser =
    std::function<PlannerOutput(const Action& rejected, const ComplianceVerdict& feedback,
                                int round)>;

// The full loop. GatewayError propagates to the caller; MalformedVerdict is
// recorded on the outcome and converts to a RoundBudget halt.
InspectionOutcome inspect_and_revise(Gateway& gateway, const Reviser& reviser,
                                     const Action& step,
                                     std::span<const ScoredRegulation> regulations,
                                     const Trajectory& t, const InspectorConfig& cfg = {});

void to_json(nlohmann::json& j, const RelevanceJudgment& r);
void from_json(const nlohmann::json& j, RelevanceJudgment& r);
void to_json(nlohmann::json& j, const ComplianceVerdict& v);
void from_json(const nlohmann::json& j, ComplianceVerdict& v);
void to_json(nlohmann::json& j, const RevisionRound& r);
void from_json(const nlohmann::json& j, RevisionRound& r);
void to_json(nlohmann::json& j, const InspectionOutcome& o);
void from_json(const nlohmann::json& j, InspectionOutcome& o);

}  // namespace planguard
