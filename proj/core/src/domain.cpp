#include "planguard/domain.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace planguard {

namespace fs = std::filesystem;

std::string to_string(Domain d) {
    switch (d) {
        case Domain::Housekeep: return "housekeep";
        case Domain::Finance: return "finance";
        case Domain::Medicine: return "medicine";
        case Domain::Food: return "food";
        case Domain::Chemistry: return "chemistry";
        case Domain::Other: return "other";
    }
    return "other";
}

Domain domain_from_string(std::string_view s) {
    if (s == "housekeep") return Domain::Housekeep;
    if (s == "finance") return Domain::Finance;
    if (s == "medicine") return Domain::Medicine;
    if (s == "food") return Domain::Food;
    if (s == "chemistry") return Domain::Chemistry;
    if (s == "other") return Domain::Other;
    throw SchemaError("domain: unknown value '" + std::string(s) + "'");
}

std::string to_string(Comparator c) {
    return c == Comparator::NameAndInput ? "name_and_input" : "name_only";
}

Comparator comparator_from_string(std::string_view s) {
    if (s == "name_and_input") return Comparator::NameAndInput;
    if (s == "name_only") return Comparator::NameOnly;
    throw SchemaError("comparator: unknown value '" + std::string(s) + "'");
}

std::string to_string(TrajectoryStatus s) {
    switch (s) {
        case TrajectoryStatus::InProgress: return "in_progress";
        case TrajectoryStatus::Completed: return "completed";
        case TrajectoryStatus::Halted: return "halted";
    }
    return "in_progress";
}

TrajectoryStatus trajectory_status_from_string(std::string_view s) {
    if (s == "in_progress") return TrajectoryStatus::InProgress;
    if (s == "completed") return TrajectoryStatus::Completed;
    if (s == "halted") return TrajectoryStatus::Halted;
    throw SchemaError("status: unknown value '" + std::string(s) + "'");
}

std::string to_string(HaltReason r) {
    switch (r) {
        case HaltReason::RepeatedMistake: return "repeated_mistake";
        case HaltReason::RoundBudget: return "round_budget";
        case HaltReason::StepBudget: return "step_budget";
        case HaltReason::Infrastructure: return "infrastructure";
    }
    return "infrastructure";
}

HaltReason halt_reason_from_string(std::string_view s) {
    if (s == "repeated_mistake") return HaltReason::RepeatedMistake;
    if (s == "round_budget") return HaltReason::RoundBudget;
    if (s == "step_budget") return HaltReason::StepBudget;
    if (s == "infrastructure") return HaltReason::Infrastructure;
    throw SchemaError("halt_reason: unknown value '" + std::string(s) + "'");
}

std::string format_number(double value) {
    if (!std::isfinite(value)) {
        throw NonCanonicalizable("non-finite number");
    }
    // 2^53 bounds the range where doubles represent integers exactly.
    if (value == std::rint(value) && std::abs(value) < 9007199254740992.0) {
        return std::to_string(static_cast<long long>(value));
    }
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

namespace {

void canonicalize_into(const Document& v, std::string& out) {
    using value_t = nlohmann::json::value_t;
    switch (v.type()) {
        case value_t::object: {
            out += '{';
            bool first = true;
            for (auto it = v.begin(); it != v.end(); ++it) {  // keys already sorted
                if (!first) out += ',';
                first = false;
                out += nlohmann::json(it.key()).dump();
                out += ':';
                canonicalize_into(it.value(), out);
            }
            out += '}';
            break;
        }
        case value_t::array: {
            out += '[';
            bool first = true;
            for (const auto& item : v) {
                if (!first) out += ',';
                first = false;
                canonicalize_into(item, out);
            }
            out += ']';
            break;
        }
        case value_t::string:
            out += v.dump();
            break;
        case value_t::boolean:
            out += v.get<bool>() ? "true" : "false";
            break;
        case value_t::number_integer:
            out += std::to_string(v.get<long long>());
            break;
        case value_t::number_unsigned:
            out += std::to_string(v.get<unsigned long long>());
            break;
        case value_t::number_float:
            out += format_number(v.get<double>());
            break;
        default:
            throw NonCanonicalizable(std::string("unsupported value kind: ") +
                                     v.type_name());
    }
}

}  // namespace

std::string canonicalize(const Document& doc) {
    std::string out;
    canonicalize_into(doc, out);
    return out;
}

bool actions_equal(const Action& a, const Action& b, Comparator mode) {
    if (a.tool != b.tool) return false;
    if (mode == Comparator::NameOnly) return true;
    return canonicalize(a.input) == canonicalize(b.input);
}

std::string action_key(const Action& a, Comparator mode) {
    if (mode == Comparator::NameOnly) return a.tool;
    return a.tool + '\x1f' + canonicalize(a.input);
}

std::optional<Document> extract_document(std::string_view text) {
    for (size_t start = text.find('{'); start != std::string_view::npos;
         start = text.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (size_t i = start; i < text.size(); ++i) {
            char c = text[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) {
                    auto candidate = text.substr(start, i - start + 1);
                    auto parsed = nlohmann::json::parse(candidate, nullptr, false);
                    if (!parsed.is_discarded()) return parsed;
                    break;  // balanced but unparseable; try the next '{'
                }
            }
        }
    }
    return std::nullopt;
}

// --- scenario format -------------------------------------------------------

namespace {

const nlohmann::json& require_field(const nlohmann::json& j, const char* name,
                                    const std::string& where) {
    auto it = j.find(name);
    if (it == j.end()) {
        throw SchemaError(where + ": missing field '" + name + "'");
    }
    return *it;
}

std::string require_string(const nlohmann::json& j, const char* name,
                           const std::string& where) {
    const auto& v = require_field(j, name, where);
    if (!v.is_string()) {
        throw SchemaError(where + ": field '" + name + "' must be a string");
    }
    return v.get<std::string>();
}

std::vector<std::string> string_list(const nlohmann::json& j, const char* name,
                                     const std::string& where) {
    auto it = j.find(name);
    if (it == j.end()) return {};
    if (!it->is_array()) {
        throw SchemaError(where + ": field '" + name + "' must be a list");
    }
    std::vector<std::string> out;
    for (const auto& v : *it) {
        if (!v.is_string()) {
            throw SchemaError(where + ": field '" + name + "' must hold strings");
        }
        out.push_back(v.get<std::string>());
    }
    return out;
}

std::map<std::string, std::string> schema_map(const nlohmann::json& v,
                                              const char* name,
                                              const std::string& where) {
    if (!v.is_object()) {
        throw SchemaError(where + ": field '" + name + "' must be an object");
    }
    std::map<std::string, std::string> out;
    for (auto it = v.begin(); it != v.end(); ++it) {
        if (!it.value().is_string()) {
            throw SchemaError(where + ": field '" + name +
                              "' must map field names to type names");
        }
        out[it.key()] = it.value().get<std::string>();
    }
    return out;
}

}  // namespace

void to_json(nlohmann::json& j, const ToolSpec& t) {
    j = nlohmann::json{{"name", t.name},
                       {"description", t.description},
                       {"input_schema", t.input_schema}};
    if (t.output_schema) j["output_schema"] = *t.output_schema;
}

void from_json(const nlohmann::json& j, ToolSpec& t) {
    const std::string where = "toolkit entry";
    t.name = require_string(j, "name", where);
    t.description = require_string(j, "description", where);
    t.input_schema = schema_map(require_field(j, "input_schema", where),
                                "input_schema", where);
    if (j.contains("output_schema")) {
        t.output_schema = schema_map(j.at("output_schema"), "output_schema", where);
    } else {
        t.output_schema.reset();
    }
}

void to_json(nlohmann::json& j, const Action& a) {
    j = nlohmann::json{{"tool", a.tool}, {"input", a.input}};
}

void from_json(const nlohmann::json& j, Action& a) {
    a.tool = require_string(j, "tool", "action");
    a.input = require_field(j, "input", "action");
}

void to_json(nlohmann::json& j, const Step& s) {
    j = nlohmann::json{{"index", s.index}, {"action", s.action}};
    if (s.rationale) j["rationale"] = *s.rationale;
    if (s.observation) j["observation"] = *s.observation;
    if (s.verdict_ref) j["verdict_ref"] = *s.verdict_ref;
}

void from_json(const nlohmann::json& j, Step& s) {
    s.index = require_field(j, "index", "step").get<int>();
    s.action = require_field(j, "action", "step").get<Action>();
    s.rationale = j.contains("rationale")
                      ? std::optional<std::string>(j.at("rationale").get<std::string>())
                      : std::nullopt;
    s.observation = j.contains("observation")
                        ? std::optional<Document>(j.at("observation"))
                        : std::nullopt;
    s.verdict_ref = j.contains("verdict_ref")
                        ? std::optional<std::string>(j.at("verdict_ref").get<std::string>())
                        : std::nullopt;
}

void to_json(nlohmann::json& j, const Trajectory& t) {
    j = nlohmann::json{{"scenario_id", t.scenario_id},
                       {"status", to_string(t.status)},
                       {"steps", t.steps}};
    if (t.final_answer) j["final_answer"] = *t.final_answer;
    if (t.halt_reason) j["halt_reason"] = to_string(*t.halt_reason);
}

void from_json(const nlohmann::json& j, Trajectory& t) {
    t.scenario_id = require_string(j, "scenario_id", "trajectory");
    t.status = trajectory_status_from_string(require_string(j, "status", "trajectory"));
    t.steps = require_field(j, "steps", "trajectory").get<std::vector<Step>>();
    t.final_answer = j.contains("final_answer")
                         ? std::optional<std::string>(j.at("final_answer").get<std::string>())
                         : std::nullopt;
    t.halt_reason = j.contains("halt_reason")
                        ? std::optional<HaltReason>(halt_reason_from_string(
                              j.at("halt_reason").get<std::string>()))
                        : std::nullopt;
    for (size_t i = 0; i < t.steps.size(); ++i) {
        if (t.steps[i].index != static_cast<int>(i)) {
            throw SchemaError("trajectory: step indices must be contiguous from 0");
        }
    }
    if (t.status == TrajectoryStatus::Completed && !t.final_answer) {
        throw SchemaError("trajectory: completed status requires a final answer");
    }
    if (t.status == TrajectoryStatus::Halted && t.final_answer) {
        throw SchemaError("trajectory: halted status forbids a final answer");
    }
}

Scenario parse_scenario(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw SchemaError("scenario: not a valid document");
    if (!j.is_object()) throw SchemaError("scenario: top level must be a map");

    Scenario s;
    s.id = require_string(j, "id", "scenario");
    if (s.id.empty()) throw SchemaError("scenario: field 'id' must be non-empty");
    s.domain = domain_from_string(require_string(j, "domain", "scenario"));
    s.instruction = require_string(j, "instruction", "scenario");
    if (s.instruction.empty()) {
        throw SchemaError("scenario '" + s.id + "': field 'instruction' must be non-empty");
    }
    const auto& toolkit = require_field(j, "toolkit", "scenario");
    if (!toolkit.is_array()) {
        throw SchemaError("scenario '" + s.id + "': field 'toolkit' must be a list");
    }
    std::set<std::string> names;
    for (const auto& tj : toolkit) {
        ToolSpec t = tj.get<ToolSpec>();
        if (t.name.empty()) {
            throw SchemaError("scenario '" + s.id + "': tool name must be non-empty");
        }
        if (!names.insert(t.name).second) {
            throw SchemaError("scenario '" + s.id + "': duplicate tool '" + t.name + "'");
        }
        s.toolkit.push_back(std::move(t));
    }
    s.risky_actions = string_list(j, "risky_actions", "scenario '" + s.id + "'");
    s.risky_outcomes = string_list(j, "risky_outcomes", "scenario '" + s.id + "'");
    s.expected_achievement = require_string(j, "expected_achievement", "scenario '" + s.id + "'");
    const auto& gt = require_field(j, "ground_truth", "scenario '" + s.id + "'");
    if (!gt.is_array()) {
        throw SchemaError("scenario '" + s.id + "': field 'ground_truth' must be a list");
    }
    for (const auto& aj : gt) {
        Action a = aj.get<Action>();
        if (!names.count(a.tool)) throw UnknownTool(s.id, a.tool);
        canonicalize(a.input);  // reject non-canonicalizable inputs up front
        s.ground_truth.push_back(std::move(a));
    }
    return s;
}

std::string serialize_scenario(const Scenario& s) {
    nlohmann::json j{{"id", s.id},
                     {"domain", to_string(s.domain)},
                     {"instruction", s.instruction},
                     {"toolkit", s.toolkit},
                     {"risky_actions", s.risky_actions},
                     {"risky_outcomes", s.risky_outcomes},
                     {"expected_achievement", s.expected_achievement},
                     {"ground_truth", s.ground_truth}};
    return j.dump(2) + "\n";
}

Scenario load_scenario_file(const std::string& path) {
    return parse_scenario(read_file(path));
}

std::vector<SuiteEntry> load_suite_manifest(const std::string& dir) {
    const std::string path = (fs::path(dir) / "manifest.json").string();
    nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("scenarios") ||
        !j.at("scenarios").is_array()) {
        throw SchemaError("manifest '" + path + "': expected {scenarios: [...]}");
    }
    std::vector<SuiteEntry> out;
    for (const auto& e : j.at("scenarios")) {
        SuiteEntry entry;
        entry.id = require_string(e, "id", "manifest entry");
        entry.domain = domain_from_string(require_string(e, "domain", "manifest entry"));
        entry.file = require_string(e, "file", "manifest entry");
        out.push_back(std::move(entry));
    }
    return out;
}

std::vector<Scenario> load_scenario_suite(const std::string& dir) {
    std::vector<Scenario> out;
    for (const auto& entry : load_suite_manifest(dir)) {
        Scenario s = load_scenario_file((fs::path(dir) / entry.file).string());
        if (s.id != entry.id) {
            throw SchemaError("manifest entry '" + entry.id + "' points at scenario '" +
                              s.id + "' (" + entry.file + ")");
        }
        if (s.domain != entry.domain) {
            throw SchemaError("scenario '" + s.id + "': domain disagrees with manifest");
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
    fs::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("short write to '" + path + "'");
}

}  // namespace planguard
