#pragma once

// End-to-end orchestration of one scenario run: retrieve regulations,
// prompt the planner, inspect the proposed step, emulate the accepted
// action, append, repeat. Strategy flags gate retrieval injection and
// inspection; suites repeat each scenario and average the scores.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "planguard/constitution.hpp"
#include "planguard/domain.hpp"
#include "planguard/emulator.hpp"
#include "planguard/evaluation.hpp"
#include "planguard/gateway.hpp"
#include "planguard/inspector.hpp"
#include "planguard/planner.hpp"
#include "planguard/prompts.hpp"
#include "planguard/retrieval.hpp"

namespace planguard {

struct RunConfig {
    StrategyFlags flags;
    int top_k = 5;
    int max_steps = 15;
    int max_rounds = 3;
    int runs_per_scenario = 2;
    Comparator comparator = Comparator::NameAndInput;
    bool enable_judges = false;
    std::string planner_model = "planner";
    std::string inspector_model = "inspector";
    std::string judge_model = "judge";
    EmulatorConfig emulator;
    PromptLibrary prompts = PromptLibrary::builtin();

    void validate() const;  // throws ConfigError
};

struct RunTranscript {
    std::string scenario_id;
    Domain domain = Domain::Other;
    int run_index = 0;
    std::string instruction;
    Trajectory trajectory;
    std::vector<InspectionOutcome> outcomes;           // one per inspected proposal
    std::vector<std::vector<std::string>> retrievals;  // regulation ids per proposal
    std::vector<std::string> request_hashes;  // gateway exchanges of this run;
                                              // exact under sequential execution,
                                              // interleaved under a parallel pool
    TrajectoryMetrics metrics;
    std::optional<SafetyLabel> safety;
    std::optional<HelpfulnessLabel> helpfulness;
    std::optional<std::string> error;  // infrastructure failure detail
    long wall_time_ms = 0;             // zero under deterministic backends
};

std::string serialize_run_transcript(const RunTranscript& rt);
RunTranscript parse_run_transcript(const std::string& text);

RunTranscript run_scenario(const Scenario& s, const RunConfig& cfg,
                           const Constitution& constitution, Gateway& gateway,
                           int run_index);

struct SuiteResult {
    std::vector<RunTranscript> runs;
    std::vector<ScenarioScore> scores;
    AggregateReport report;
};

// runs_per_scenario transcripts per scenario, executed by a pool of the
// given width (strict mock scripts require width 1). Per-run failures are
// recorded on the transcript; the suite continues. Infrastructure-halted
// runs are excluded from score averaging and counted separately.
SuiteResult run_suite(std::span<const Scenario> scenarios, const RunConfig& cfg,
                      const Constitution& constitution, Gateway& gateway,
                      const std::string& strategy_mode = "custom", int parallel = 1);

ScenarioScore score_scenario(const Scenario& s,
                             std::span<const RunTranscript> runs_of_scenario);

void to_json(nlohmann::json& j, const RunTranscript& rt);
void from_json(const nlohmann::json& j, RunTranscript& rt);

}  // namespace planguard
