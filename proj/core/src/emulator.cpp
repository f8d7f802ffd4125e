#include "planguard/emulator.hpp"

#include "planguard/planner.hpp"
#include "reask.hpp"

namespace planguard {

void ScriptedToolTable::add(const std::string& tool, const Document& input,
                            Document observation) {
    exact[{tool, canonicalize(input)}] = std::move(observation);
}

void ScriptedToolTable::add_default(const std::string& tool, Document observation) {
    defaults[tool] = std::move(observation);
}

void ScriptedToolTable::merge(const ScriptedToolTable& other) {
    for (const auto& [key, obs] : other.exact) exact[key] = obs;
    for (const auto& [tool, obs] : other.defaults) defaults[tool] = obs;
}

ScriptedToolTable ScriptedToolTable::parse(const nlohmann::json& j) {
    if (!j.is_array()) {
        throw SchemaError("scripted tool table: expected a list of entries");
    }
    ScriptedToolTable table;
    for (const auto& e : j) {
        if (!e.is_object() || !e.contains("tool")) {
            throw SchemaError("scripted tool table: entry needs a 'tool' field");
        }
        const std::string tool = e.at("tool").get<std::string>();
        if (e.contains("default_observation")) {
            table.add_default(tool, e.at("default_observation"));
        } else if (e.contains("input") && e.contains("observation")) {
            table.add(tool, e.at("input"), e.at("observation"));
        } else {
            throw SchemaError("scripted tool table: entry for '" + tool +
                              "' needs input+observation or default_observation");
        }
    }
    return table;
}

ScriptedToolTable ScriptedToolTable::load(const std::string& path) {
    nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) {
        throw SchemaError("scripted tool table '" + path + "': not valid JSON");
    }
    return parse(j);
}

namespace {

std::string render_tool_spec(const ToolSpec& spec) {
    nlohmann::json schema(spec.input_schema);
    std::string out = spec.name + ": " + spec.description +
                      "\ninput fields: " + canonicalize(schema);
    if (spec.output_schema) {
        out += "\noutput fields: " + canonicalize(nlohmann::json(*spec.output_schema));
    }
    return out;
}

Document scripted_lookup(const ScriptedToolTable& table, const Action& action) {
    const std::string canonical = canonicalize(action.input);
    auto it = table.exact.find({action.tool, canonical});
    if (it != table.exact.end()) return it->second;
    auto def = table.defaults.find(action.tool);
    if (def != table.defaults.end()) return def->second;
    throw UnknownCall(action.tool, canonical);
}

}  // namespace

Document emulate(const EmulatorConfig& cfg, const ToolSpec& spec, const Action& action,
                 const Trajectory& t, Gateway* gateway, const PromptLibrary& prompts) {
    if (action.tool != spec.name) {
        throw SchemaError("emulate: action tool '" + action.tool +
                          "' does not match spec '" + spec.name + "'");
    }
    if (cfg.kind == EmulatorKind::Scripted) {
        if (!cfg.table) throw ConfigError("emulator.table", "scripted emulator needs a table");
        Document obs = scripted_lookup(*cfg.table, action);
        canonicalize(obs);  // observations must canonicalize before attaching
        return obs;
    }

    if (!cfg.model) throw ConfigError("emulator.model", "model-backed emulator needs a model");
    if (!gateway) throw ConfigError("emulator", "model-backed emulator needs a gateway");

    const std::string user = fill_template(
        prompts.emulator_user,
        {{"tool_spec", render_tool_spec(spec)},
         {"trajectory", render_trajectory_block(t)},
         {"action", action.tool + " " + canonicalize(action.input)}});
    ChatRequest req;
    req.model = *cfg.model;
    req.tag = CallTag::Emulator;
    req.messages = {{Role::System, prompts.emulator_system}, {Role::User, user}};

    auto result = detail::ask_with_reask<Document>(
        *gateway, req, prompts.reask_note,
        [](const std::string& reply) -> std::optional<Document> {
            auto doc = extract_document(reply);
            if (!doc) return std::nullopt;
            try {
                canonicalize(*doc);
            } catch (const NonCanonicalizable&) {
                return std::nullopt;
            }
            return doc;
        });
    if (!result.value) {
        throw MalformedObservation("emulator reply for tool '" + action.tool +
                                   "' held no parseable observation document");
    }
    return *result.value;
}

}  // namespace planguard
