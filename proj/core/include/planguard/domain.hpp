#pragma once

// Core value types shared by every other module: tools, actions, steps,
// trajectories, scenarios, and canonical equality over actions.
//
// Documents (tool inputs, observations) are JSON values. Canonical text is
// the deterministic serialization used wherever two documents must compare
// equal across runs and platforms: object keys sorted, no insignificant
// whitespace, integral numbers printed without a fraction part, other
// numbers printed in shortest round-trip form.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "planguard/errors.hpp"

namespace planguard {

using Document = nlohmann::json;

enum class Domain { Housekeep, Finance, Medicine, Food, Chemistry, Other };

std::string to_string(Domain d);
Domain domain_from_string(std::string_view s);  // throws SchemaError

// Comparator used by metrics and repeated-mistake detection. NameAndInput
// compares tool name plus canonical input text; NameOnly compares names.
enum class Comparator { NameAndInput, NameOnly };

std::string to_string(Comparator c);
Comparator comparator_from_string(std::string_view s);

struct ToolSpec {
    std::string name;
    std::string description;
    std::map<std::string, std::string> input_schema;  // field name -> scalar type
    std::optional<std::map<std::string, std::string>> output_schema;
};

struct Action {
    std::string tool;
    Document input = Document::object();
};

struct Step {
    int index = 0;
    std::optional<std::string> rationale;
    Action action;
    std::optional<Document> observation;   // present iff the step was executed
    std::optional<std::string> verdict_ref;
};

enum class TrajectoryStatus { InProgress, Completed, Halted };

enum class HaltReason { RepeatedMistake, RoundBudget, StepBudget, Infrastructure };

std::string to_string(TrajectoryStatus s);
std::string to_string(HaltReason r);
TrajectoryStatus trajectory_status_from_string(std::string_view s);
HaltReason halt_reason_from_string(std::string_view s);

struct Trajectory {
    std::string scenario_id;
    std::vector<Step> steps;
    TrajectoryStatus status = TrajectoryStatus::InProgress;
    std::optional<std::string> final_answer;  // present iff status == Completed
    std::optional<HaltReason> halt_reason;    // present iff status == Halted
};

struct Scenario {
    std::string id;
    Domain domain = Domain::Other;
    std::string instruction;
    std::vector<ToolSpec> toolkit;
    std::vector<std::string> risky_actions;
    std::vector<std::string> risky_outcomes;
    std::string expected_achievement;
    std::vector<Action> ground_truth;  // every tool name must appear in toolkit
};

class NonCanonicalizable : public Error {
public:
    explicit NonCanonicalizable(const std::string& message) : Error(message) {}
};

// Malformed input document or file; the message names the offending field.
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& message) : Error(message) {}
};

class UnknownTool : public Error {
public:
    UnknownTool(const std::string& scenario_id, const std::string& tool)
        : Error("scenario '" + scenario_id + "': tool '" + tool +
                "' is not declared in the toolkit"),
          tool_(tool) {}
    const std::string& tool() const { return tool_; }

private:
    std::string tool_;
};

// Deterministic canonical serialization. Throws NonCanonicalizable on
// non-finite numbers and on value kinds outside {number, text, boolean,
// list, map}.
std::string canonicalize(const Document& doc);

// Number rendering shared with canonicalize: integral values print without
// a fraction part, everything else in shortest round-trip form.
std::string format_number(double value);

bool actions_equal(const Action& a, const Action& b,
                   Comparator mode = Comparator::NameAndInput);

// Stable identity of an action under a comparator; equal keys iff
// actions_equal holds.
std::string action_key(const Action& a, Comparator mode = Comparator::NameAndInput);

// Scans text for the first balanced {...} region that parses as a document.
// Used to salvage structured replies embedded in model prose.
std::optional<Document> extract_document(std::string_view text);

// Scenario file format (External Interfaces): one JSON document per
// scenario, ground_truth as a list of {tool, input}. All invariants are
// validated on parse; serialization round-trips byte-stably.
Scenario parse_scenario(const std::string& text);
std::string serialize_scenario(const Scenario& s);
Scenario load_scenario_file(const std::string& path);

// A suite directory holds scenario files plus manifest.json listing
// {id, domain, file} entries. Scenarios load in manifest order.
struct SuiteEntry {
    std::string id;
    Domain domain = Domain::Other;
    std::string file;
};

std::vector<SuiteEntry> load_suite_manifest(const std::string& dir);
std::vector<Scenario> load_scenario_suite(const std::string& dir);

// JSON bindings used by the scenario format and the run transcripts.
void to_json(nlohmann::json& j, const ToolSpec& t);
void from_json(const nlohmann::json& j, ToolSpec& t);
void to_json(nlohmann::json& j, const Action& a);
void from_json(const nlohmann::json& j, Action& a);
void to_json(nlohmann::json& j, const Step& s);
void from_json(const nlohmann::json& j, Step& s);
void to_json(nlohmann::json& j, const Trajectory& t);
void from_json(const nlohmann::json& j, Trajectory& t);

std::string read_file(const std::string& path);            // throws IoError
void write_file(const std::string& path, std::string_view content);

}  // namespace planguard
