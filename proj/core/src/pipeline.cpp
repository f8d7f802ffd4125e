#include "planguard/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <map>
#include <thread>

namespace planguard {

void RunConfig::validate() const {
    if (top_k < 1) throw ConfigError("top_k", "must be at least 1");
    if (max_steps < 1) throw ConfigError("max_steps", "must be at least 1");
    if (max_rounds < 1) throw ConfigError("max_rounds", "must be at least 1");
    if (runs_per_scenario < 1) throw ConfigError("runs", "must be at least 1");
    if (emulator.kind == EmulatorKind::Scripted && !emulator.table) {
        throw ConfigError("emulator.table", "scripted emulator needs a table");
    }
    if (emulator.kind == EmulatorKind::ModelBacked && !emulator.model) {
        throw ConfigError("emulator.model", "model-backed emulator needs a model");
    }
}

namespace {

const ToolSpec& spec_for(const Scenario& s, const std::string& tool) {
    for (const auto& t : s.toolkit) {
        if (t.name == tool) return t;
    }
    throw UnknownTool(s.id, tool);
}

std::vector<std::string> regulation_ids(std::span<const ScoredRegulation> regs) {
    std::vector<std::string> ids;
    ids.reserve(regs.size());
    for (const auto& r : regs) ids.push_back(r.regulation.id);
    return ids;
}

}  // namespace

RunTranscript run_scenario(const Scenario& s, const RunConfig& cfg,
                           const Constitution& constitution, Gateway& gateway,
                           int run_index) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    const size_t transcript_start = gateway.transcript().size();

    RunTranscript rt;
    rt.scenario_id = s.id;
    rt.domain = s.domain;
    rt.run_index = run_index;
    rt.instruction = s.instruction;
    rt.trajectory.scenario_id = s.id;

    const bool use_retrieval = cfg.flags.in_planning || cfg.flags.post_inspection;
    std::optional<RegulationIndex> index;
    if (use_retrieval) {
        index = build_index(filter_by_domain(constitution, s.domain));
    }

    try {
        while (static_cast<int>(rt.trajectory.steps.size()) < cfg.max_steps) {
            // One retrieval per proposal, shared by prompt injection and the
            // inspector.
            std::vector<ScoredRegulation> regs;
            if (use_retrieval) {
                regs = retrieve(*index, compose_query(s, rt.trajectory), cfg.top_k);
                rt.retrievals.push_back(regulation_ids(regs));
            }

            std::span<const ScoredRegulation> injected =
                cfg.flags.in_planning ? std::span<const ScoredRegulation>(regs)
                                      : std::span<const ScoredRegulation>();
            PlannerPrompt prompt = make_planner_prompt(s, rt.trajectory, injected,
                                                       cfg.prompts);
            PlannerOutput proposal =
                propose_next_step(gateway, prompt, cfg.prompts, cfg.planner_model);
            if (proposal.kind == PlannerOutput::Kind::Final) {
                rt.trajectory.status = TrajectoryStatus::Completed;
                rt.trajectory.final_answer = proposal.final_answer;
                break;
            }

            Action action = *proposal.action;
            std::optional<std::string> rationale = proposal.rationale;
            std::optional<std::string> verdict_ref;

            if (cfg.flags.post_inspection) {
                Reviser reviser = [&](const Action& rejected,
                                      const ComplianceVerdict& feedback,
                                      int /*round*/) {
                    return propose_revision(gateway, prompt, rejected, feedback,
                                            cfg.prompts, cfg.planner_model);
                };
                InspectorConfig icfg;
                icfg.max_rounds = cfg.max_rounds;
                icfg.comparator = cfg.comparator;
                icfg.model = cfg.inspector_model;
                icfg.prompts = cfg.prompts;
                InspectionOutcome outcome = inspect_and_revise(
                    gateway, reviser, action, regs, rt.trajectory, icfg);
                const bool halted = outcome.halted;
                const std::optional<HaltReason> reason = outcome.halt_reason;
                if (!halted) {
                    if (!actions_equal(outcome.accepted->action, action, cfg.comparator)) {
                        rationale.reset();  // revised step; original rationale is stale
                    }
                    action = outcome.accepted->action;
                    verdict_ref = outcome.accepted->verdict.request_hash.empty()
                                      ? std::optional<std::string>("outcome-" +
                                            std::to_string(rt.outcomes.size()))
                                      : std::optional<std::string>(
                                            outcome.accepted->verdict.request_hash);
                }
                rt.outcomes.push_back(std::move(outcome));
                if (halted) {
                    rt.trajectory.status = TrajectoryStatus::Halted;
                    rt.trajectory.halt_reason = reason;
                    break;
                }
            }

            const ToolSpec& spec = spec_for(s, action.tool);
            Document observation =
                emulate(cfg.emulator, spec, action, rt.trajectory, &gateway, cfg.prompts);
            Step step;
            step.index = static_cast<int>(rt.trajectory.steps.size());
            step.rationale = std::move(rationale);
            step.action = std::move(action);
            step.observation = std::move(observation);
            step.verdict_ref = std::move(verdict_ref);
            rt.trajectory.steps.push_back(std::move(step));
        }
        if (rt.trajectory.status == TrajectoryStatus::InProgress) {
            rt.trajectory.status = TrajectoryStatus::Halted;
            rt.trajectory.halt_reason = HaltReason::StepBudget;
        }
    } catch (const Error& e) {
        // Infrastructure failures are a distinct halt so metrics can exclude
        // them from the safety-halt counts.
        rt.trajectory.status = TrajectoryStatus::Halted;
        rt.trajectory.halt_reason = HaltReason::Infrastructure;
        rt.trajectory.final_answer.reset();
        rt.error = e.what();
    }

    rt.metrics = compute_metrics(rt.trajectory, s.ground_truth, cfg.comparator);
    if (cfg.enable_judges && !rt.error) {
        rt.safety = judge_safety(gateway, s, rt.trajectory, cfg.prompts, cfg.judge_model);
        rt.helpfulness =
            judge_helpfulness(gateway, s, rt.trajectory, cfg.prompts, cfg.judge_model);
    }

    auto transcript = gateway.transcript();
    for (size_t i = transcript_start; i < transcript.size(); ++i) {
        rt.request_hashes.push_back(transcript[i].request_hash);
    }
    if (!gateway.deterministic()) {
        rt.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - start)
                              .count();
    }
    return rt;
}

ScenarioScore score_scenario(const Scenario& s,
                             std::span<const RunTranscript> runs_of_scenario) {
    ScenarioScore score;
    score.scenario_id = s.id;
    score.domain = s.domain;

    std::vector<double> safety, help, correct, prefix, total;
    for (const auto& rt : runs_of_scenario) {
        if (rt.trajectory.halt_reason == HaltReason::Infrastructure) {
            ++score.infrastructure_halts;
            continue;
        }
        ++score.runs;
        if (rt.trajectory.status == TrajectoryStatus::Halted) ++score.safety_halts;
        correct.push_back(rt.metrics.correct);
        prefix.push_back(rt.metrics.prefix);
        total.push_back(rt.metrics.total);
        if (rt.safety) safety.push_back(numeric(*rt.safety));
        if (rt.helpfulness) help.push_back(numeric(*rt.helpfulness));
    }
    if (!correct.empty()) {
        score.correct = average_runs(correct);
        score.prefix = average_runs(prefix);
        score.total = average_runs(total);
    }
    if (!safety.empty()) score.safety = average_runs(safety);
    if (!help.empty()) score.helpfulness = average_runs(help);
    return score;
}

SuiteResult run_suite(std::span<const Scenario> scenarios, const RunConfig& cfg,
                      const Constitution& constitution, Gateway& gateway,
                      const std::string& strategy_mode, int parallel) {
    cfg.validate();
    if (scenarios.empty()) throw ConfigError("scenarios", "suite needs at least one scenario");
    parallel = std::max(1, parallel);

    struct Job {
        size_t scenario_index;
        int run_index;
    };
    std::vector<Job> jobs;
    for (size_t i = 0; i < scenarios.size(); ++i) {
        for (int r = 0; r < cfg.runs_per_scenario; ++r) jobs.push_back({i, r});
    }

    SuiteResult result;
    result.runs.resize(jobs.size());

    auto execute = [&](const Job& job, size_t slot) {
        const Scenario& s = scenarios[job.scenario_index];
        try {
            result.runs[slot] = run_scenario(s, cfg, constitution, gateway, job.run_index);
        } catch (const Error& e) {
            // run_scenario already absorbs run-level failures; this guards
            // config errors thrown before the run loop starts.
            RunTranscript rt;
            rt.scenario_id = s.id;
            rt.domain = s.domain;
            rt.run_index = job.run_index;
            rt.instruction = s.instruction;
            rt.trajectory.scenario_id = s.id;
            rt.trajectory.status = TrajectoryStatus::Halted;
            rt.trajectory.halt_reason = HaltReason::Infrastructure;
            rt.error = e.what();
            result.runs[slot] = std::move(rt);
        }
    };

    if (parallel == 1) {
        for (size_t i = 0; i < jobs.size(); ++i) execute(jobs[i], i);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> workers;
        const int width = std::min<int>(parallel, static_cast<int>(jobs.size()));
        workers.reserve(static_cast<size_t>(width));
        for (int w = 0; w < width; ++w) {
            workers.emplace_back([&] {
                while (true) {
                    const size_t i = next.fetch_add(1);
                    if (i >= jobs.size()) return;
                    execute(jobs[i], i);
                }
            });
        }
        for (auto& t : workers) t.join();
    }

    for (size_t i = 0; i < scenarios.size(); ++i) {
        std::vector<RunTranscript> of_scenario;
        for (const auto& rt : result.runs) {
            if (rt.scenario_id == scenarios[i].id) of_scenario.push_back(rt);
        }
        result.scores.push_back(score_scenario(scenarios[i], of_scenario));
    }
    result.report = aggregate_report(result.scores, strategy_mode);
    return result;
}

// --- serialization ---------------------------------------------------------

void to_json(nlohmann::json& j, const RunTranscript& rt) {
    j = nlohmann::json{{"scenario_id", rt.scenario_id},
                       {"domain", to_string(rt.domain)},
                       {"run_index", rt.run_index},
                       {"instruction", rt.instruction},
                       {"trajectory", rt.trajectory},
                       {"outcomes", rt.outcomes},
                       {"retrievals", rt.retrievals},
                       {"request_hashes", rt.request_hashes},
                       {"metrics", rt.metrics},
                       {"wall_time_ms", rt.wall_time_ms}};
    if (rt.safety) j["safety"] = to_string(*rt.safety);
    if (rt.helpfulness) j["helpfulness"] = to_string(*rt.helpfulness);
    if (rt.error) j["error"] = *rt.error;
}

namespace {

SafetyLabel safety_label_from_string(const std::string& s) {
    auto label = parse_safety_label(s);
    if (!label || to_string(*label) != s) {
        throw SchemaError("safety: unknown label '" + s + "'");
    }
    return *label;
}

HelpfulnessLabel helpfulness_label_from_string(const std::string& s) {
    auto label = parse_helpfulness_label(s);
    if (!label || to_string(*label) != s) {
        throw SchemaError("helpfulness: unknown label '" + s + "'");
    }
    return *label;
}

}  // namespace

void from_json(const nlohmann::json& j, RunTranscript& rt) {
    rt.scenario_id = j.at("scenario_id").get<std::string>();
    rt.domain = domain_from_string(j.at("domain").get<std::string>());
    rt.run_index = j.at("run_index").get<int>();
    rt.instruction = j.at("instruction").get<std::string>();
    rt.trajectory = j.at("trajectory").get<Trajectory>();
    rt.outcomes = j.at("outcomes").get<std::vector<InspectionOutcome>>();
    rt.retrievals = j.at("retrievals").get<std::vector<std::vector<std::string>>>();
    rt.request_hashes = j.at("request_hashes").get<std::vector<std::string>>();
    rt.metrics = j.at("metrics").get<TrajectoryMetrics>();
    rt.wall_time_ms = j.at("wall_time_ms").get<long>();
    rt.safety = j.contains("safety")
                    ? std::optional<SafetyLabel>(
                          safety_label_from_string(j.at("safety").get<std::string>()))
                    : std::nullopt;
    rt.helpfulness = j.contains("helpfulness")
                         ? std::optional<HelpfulnessLabel>(helpfulness_label_from_string(
                               j.at("helpfulness").get<std::string>()))
                         : std::nullopt;
    rt.error = j.contains("error")
                   ? std::optional<std::string>(j.at("error").get<std::string>())
                   : std::nullopt;
}

std::string serialize_run_transcript(const RunTranscript& rt) {
    return nlohmann::json(rt).dump(2) + "\n";
}

RunTranscript parse_run_transcript(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw SchemaError("run transcript: not valid JSON");
    return j.get<RunTranscript>();
}

}  // namespace planguard
