#pragma once

// Command implementations behind the command-line binary: run a suite,
// rebuild report tables from a run directory, emit training datasets, and
// validate input files. The binary itself only parses flags and dispatches.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "planguard/domain.hpp"
#include "planguard/pipeline.hpp"

namespace planguard {

enum class Mode { Full, PromptingOnly, InspectionOnly, None, PreplanningEmit };

std::string to_string(Mode m);
Mode mode_from_string(std::string_view s);

// full = {T,T,T}; prompting_only = {T,F,F}; inspection_only = {F,T,F};
// none = {F,F,F}; preplanning_emit = none plus dataset emission.
StrategyFlags flags_for_mode(Mode m);

struct CliConfig {
    // paths
    std::string constitution_path;
    std::string scenario_dir;
    std::string out_dir = "out";
    std::string prompt_dir;       // empty: builtin templates
    std::string tool_table_path;  // file, or directory of tables to merge
    std::string mock_script_path;

    // backend
    std::string backend = "mock";  // "mock" or a live backend name
    std::string endpoint;          // base URL for live backends
    std::string endpoint_path = "/v1/chat/completions";

    // run parameters
    Mode mode = Mode::Full;
    int top_k = 5;
    int max_steps = 15;
    int max_rounds = 3;
    int runs = 2;
    Comparator comparator = Comparator::NameAndInput;
    bool judges = false;
    int qa_styles = 5;
    int parallel = 0;  // 0: logical cores capped at 8
    std::optional<Domain> domain_filter;

    std::string planner_model = "planner";
    std::string inspector_model = "inspector";
    std::string judge_model = "judge";
    std::string emulator_kind = "scripted";  // or "model_backed"
    std::string emulator_model;
};

CliConfig parse_cli_config(const nlohmann::json& j);
CliConfig load_cli_config(const std::string& path);
nlohmann::json config_snapshot(const CliConfig& cfg, bool deterministic);

// Executes the suite and writes the run directory: manifest.json,
// runs/<scenario>.run<k>.json, gateway.jsonl, report.txt/.csv, and datasets
// when the mode asks for them. Exit 0 means the suite completed, safety
// halts included; nonzero means config or IO failure.
int cmd_run(const CliConfig& cfg, std::ostream& out);

// Rebuilds the aggregate tables from a run directory.
int cmd_report(const std::string& run_dir, std::ostream& out);

// Emits the QA corpus (from a constitution, via the gateway) and/or the
// hindsight dataset (from a run directory's transcripts); prints counts.
int cmd_emit_datasets(const CliConfig& cfg, const std::string& run_dir,
                      std::ostream& out);

// Validates constitution, scenario suite, and scripted tool tables; prints
// one line per breach and returns nonzero if any was found.
int cmd_validate(const CliConfig& cfg, std::ostream& out);

}  // namespace planguard
