#include "planguard/inspector.hpp"

#include <algorithm>

#include "reask.hpp"

namespace planguard {

std::string to_string(Verdict v) {
    return v == Verdict::Safe ? "safe" : "unsafe";
}

Verdict verdict_from_string(std::string_view s) {
    if (s == "safe") return Verdict::Safe;
    if (s == "unsafe") return Verdict::Unsafe;
    throw SchemaError("verdict: unknown value '" + std::string(s) + "'");
}

std::vector<Action> InspectionOutcome::rejected_actions() const {
    std::vector<Action> out;
    for (const auto& r : rounds) out.push_back(r.rejected_step);
    if (halted && halt_reason == HaltReason::RepeatedMistake && !rounds.empty() &&
        rounds.back().revised) {
        out.push_back(*rounds.back().revised);
    }
    return out;
}

namespace {

std::string render_action(const Action& a) {
    return a.tool + " " + canonicalize(a.input);
}

std::optional<bool> parse_yes_no(const nlohmann::json& v) {
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_string()) {
        std::string s = v.get<std::string>();
        std::transform(s.begin(), s.end(), s.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (s == "yes" || s == "true") return true;
        if (s == "no" || s == "false") return false;
    }
    return std::nullopt;
}

}  // namespace

RelevanceJudgment judge_relevance(Gateway& gateway, const Action& step,
                                  const Trajectory& t, const Regulation& reg,
                                  const PromptLibrary& prompts, const std::string& model) {
    const std::string user =
        fill_template(prompts.relevance_user,
                      {{"trajectory", render_trajectory_block(t)},
                       {"action", render_action(step)},
                       {"regulation_id", reg.id},
                       {"regulation_text", reg.text}});
    ChatRequest req;
    req.model = model;
    req.tag = CallTag::Inspector;
    req.messages = {{Role::System, prompts.relevance_system}, {Role::User, user}};

    auto result = detail::ask_with_reask<RelevanceJudgment>(
        gateway, req, prompts.reask_note,
        [&](const std::string& reply) -> std::optional<RelevanceJudgment> {
            auto doc = extract_document(reply);
            if (!doc || !doc->contains("relevant")) return std::nullopt;
            auto relevant = parse_yes_no(doc->at("relevant"));
            if (!relevant) return std::nullopt;
            std::string reason = doc->value("reason", "");
            if (reason.empty()) return std::nullopt;
            return RelevanceJudgment{reg.id, *relevant, std::move(reason)};
        });
    if (!result.value) {
        // Fail closed: an unreadable relevance reply must not drop a
        // regulation from the compliance check.
        return {reg.id, true, "inspector reply unparseable; treated as relevant"};
    }
    return *result.value;
}

ComplianceVerdict judge_compliance(Gateway& gateway, const Action& step,
                                   const Trajectory& t,
                                   std::span<const Regulation> relevant_regs,
                                   const PromptLibrary& prompts, const std::string& model) {
    if (relevant_regs.empty()) {
        return {Verdict::Safe, {}, "no relevant regulations", ""};
    }
    std::string regulations;
    for (const auto& reg : relevant_regs) {
        regulations += "[" + reg.id + "] " + reg.text + '\n';
    }
    const std::string user =
        fill_template(prompts.compliance_user, {{"trajectory", render_trajectory_block(t)},
                                                {"action", render_action(step)},
                                                {"regulations", regulations}});
    ChatRequest req;
    req.model = model;
    req.tag = CallTag::Inspector;
    req.messages = {{Role::System, prompts.compliance_system}, {Role::User, user}};

    auto result = detail::ask_with_reask<ComplianceVerdict>(
        gateway, req, prompts.reask_note,
        [&](const std::string& reply) -> std::optional<ComplianceVerdict> {
            auto doc = extract_document(reply);
            if (!doc || !doc->contains("verdict") || !doc->at("verdict").is_string()) {
                return std::nullopt;
            }
            Verdict verdict;
            try {
                verdict = verdict_from_string(doc->at("verdict").get<std::string>());
            } catch (const SchemaError&) {
                return std::nullopt;
            }
            std::string explanation = doc->value("reason", "");
            if (explanation.empty()) return std::nullopt;

            ComplianceVerdict out;
            out.verdict = verdict;
            out.explanation = std::move(explanation);
            if (verdict == Verdict::Unsafe) {
                if (!doc->contains("violated") || !doc->at("violated").is_array()) {
                    return std::nullopt;
                }
                for (const auto& v : doc->at("violated")) {
                    if (!v.is_string()) continue;
                    const std::string id = v.get<std::string>();
                    const bool known = std::any_of(
                        relevant_regs.begin(), relevant_regs.end(),
                        [&](const Regulation& reg) { return reg.id == id; });
                    if (known) out.violated_ids.push_back(id);
                }
                // An unsafe verdict must cite at least one regulation that was
                // judged relevant in this cycle.
                if (out.violated_ids.empty()) return std::nullopt;
            }
            return out;
        });
    if (!result.value) {
        throw MalformedVerdict("compliance reply for action '" + step.tool +
                               "' was unusable after a re-ask: " + result.last_reply);
    }
    result.value->request_hash = result.request_hash;
    return *result.value;
}

InspectionOutcome inspect_and_revise(Gateway& gateway, const Reviser& reviser,
                                     const Action& step,
                                     std::span<const ScoredRegulation> regulations,
                                     const Trajectory& t, const InspectorConfig& cfg) {
    if (cfg.max_rounds < 1) throw ConfigError("max_rounds", "must be at least 1");

    InspectionOutcome outcome;
    Action candidate = step;

    auto halt = [&](HaltReason reason) {
        outcome.halted = true;
        outcome.halt_reason = reason;
        return outcome;
    };

    while (true) {
        std::vector<RelevanceJudgment> relevance;
        std::vector<Regulation> relevant_regs;
        for (const auto& sr : regulations) {
            RelevanceJudgment j = judge_relevance(gateway, candidate, t, sr.regulation,
                                                  cfg.prompts, cfg.model);
            if (j.relevant) relevant_regs.push_back(sr.regulation);
            relevance.push_back(std::move(j));
        }

        ComplianceVerdict verdict;
        try {
            verdict = judge_compliance(gateway, candidate, t, relevant_regs,
                                       cfg.prompts, cfg.model);
        } catch (const MalformedVerdict& e) {
            outcome.error = e.what();
            return halt(HaltReason::RoundBudget);
        }

        if (verdict.verdict == Verdict::Safe) {
            AcceptedStep accepted;
            accepted.action = candidate;
            accepted.verdict = verdict;
            accepted.relevance = std::move(relevance);
            if (!relevant_regs.empty()) accepted.top_relevant = relevant_regs.front();
            outcome.accepted = std::move(accepted);
            return outcome;
        }

        if (static_cast<int>(outcome.rounds.size()) >= cfg.max_rounds) {
            return halt(HaltReason::RoundBudget);
        }

        RevisionRound round;
        round.round = static_cast<int>(outcome.rounds.size()) + 1;
        round.rejected_step = candidate;
        round.rejected_canonical = canonicalize(candidate.input);
        round.feedback = verdict;
        round.relevance = std::move(relevance);
        if (!verdict.violated_ids.empty()) {
            auto it = std::find_if(relevant_regs.begin(), relevant_regs.end(),
                                   [&](const Regulation& reg) {
                                       return reg.id == verdict.violated_ids.front();
                                   });
            if (it != relevant_regs.end()) round.violated_regulation = *it;
        }

        PlannerOutput revision = reviser(candidate, verdict, round.round);
        if (revision.kind != PlannerOutput::Kind::NextStep || !revision.action) {
            outcome.rounds.push_back(std::move(round));
            outcome.error = "planner finalized instead of revising the rejected step";
            return halt(HaltReason::RoundBudget);
        }
        round.revised = revision.action;
        outcome.rounds.push_back(std::move(round));

        // "Exactly the same mistake": the replacement matches a step this
        // outcome already rejected.
        const bool repeated = std::any_of(
            outcome.rounds.begin(), outcome.rounds.end(), [&](const RevisionRound& r) {
                return actions_equal(r.rejected_step, *revision.action, cfg.comparator);
            });
        if (repeated) {
            return halt(HaltReason::RepeatedMistake);
        }
        candidate = *revision.action;
    }
}

// --- serialization ---------------------------------------------------------

void to_json(nlohmann::json& j, const RelevanceJudgment& r) {
    j = nlohmann::json{{"regulation_id", r.regulation_id},
                       {"relevant", r.relevant},
                       {"reason", r.reason}};
}

void from_json(const nlohmann::json& j, RelevanceJudgment& r) {
    r.regulation_id = j.at("regulation_id").get<std::string>();
    r.relevant = j.at("relevant").get<bool>();
    r.reason = j.at("reason").get<std::string>();
}

void to_json(nlohmann::json& j, const ComplianceVerdict& v) {
    j = nlohmann::json{{"verdict", to_string(v.verdict)},
                       {"violated_ids", v.violated_ids},
                       {"explanation", v.explanation},
                       {"request_hash", v.request_hash}};
}

void from_json(const nlohmann::json& j, ComplianceVerdict& v) {
    v.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    v.violated_ids = j.at("violated_ids").get<std::vector<std::string>>();
    v.explanation = j.at("explanation").get<std::string>();
    v.request_hash = j.value("request_hash", "");
}

void to_json(nlohmann::json& j, const RevisionRound& r) {
    j = nlohmann::json{{"round", r.round},
                       {"rejected_step", r.rejected_step},
                       {"rejected_canonical", r.rejected_canonical},
                       {"feedback", r.feedback},
                       {"relevance", r.relevance}};
    if (r.violated_regulation) j["violated_regulation"] = *r.violated_regulation;
    if (r.revised) j["revised"] = *r.revised;
}

void from_json(const nlohmann::json& j, RevisionRound& r) {
    r.round = j.at("round").get<int>();
    r.rejected_step = j.at("rejected_step").get<Action>();
    r.rejected_canonical = j.at("rejected_canonical").get<std::string>();
    r.feedback = j.at("feedback").get<ComplianceVerdict>();
    r.relevance = j.at("relevance").get<std::vector<RelevanceJudgment>>();
    r.violated_regulation = j.contains("violated_regulation")
                                ? std::optional<Regulation>(
                                      j.at("violated_regulation").get<Regulation>())
                                : std::nullopt;
    r.revised = j.contains("revised")
                    ? std::optional<Action>(j.at("revised").get<Action>())
                    : std::nullopt;
}

void to_json(nlohmann::json& j, const InspectionOutcome& o) {
    j = nlohmann::json{{"rounds", o.rounds}, {"halted", o.halted}};
    if (o.accepted) {
        nlohmann::json a{{"action", o.accepted->action},
                         {"verdict", o.accepted->verdict},
                         {"relevance", o.accepted->relevance}};
        if (o.accepted->top_relevant) a["top_relevant"] = *o.accepted->top_relevant;
        j["accepted"] = std::move(a);
    }
    if (o.halt_reason) j["halt_reason"] = to_string(*o.halt_reason);
    if (o.error) j["error"] = *o.error;
}

void from_json(const nlohmann::json& j, InspectionOutcome& o) {
    o.rounds = j.at("rounds").get<std::vector<RevisionRound>>();
    o.halted = j.at("halted").get<bool>();
    if (j.contains("accepted")) {
        const auto& a = j.at("accepted");
        AcceptedStep accepted;
        accepted.action = a.at("action").get<Action>();
        accepted.verdict = a.at("verdict").get<ComplianceVerdict>();
        accepted.relevance = a.at("relevance").get<std::vector<RelevanceJudgment>>();
        accepted.top_relevant =
            a.contains("top_relevant")
                ? std::optional<Regulation>(a.at("top_relevant").get<Regulation>())
                : std::nullopt;
        o.accepted = std::move(accepted);
    } else {
        o.accepted.reset();
    }
    o.halt_reason = j.contains("halt_reason")
                        ? std::optional<HaltReason>(
                              halt_reason_from_string(j.at("halt_reason").get<std::string>()))
                        : std::nullopt;
    o.error = j.contains("error")
                  ? std::optional<std::string>(j.at("error").get<std::string>())
                  : std::nullopt;
}

}  // namespace planguard
