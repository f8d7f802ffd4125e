#pragma once

// Sandboxed tool execution. Scripted tables give deterministic observations
// keyed on (tool, canonical input); the model-backed emulator asks the
// gateway to simulate the tool from its specification.

#include <map>
#include <optional>
#include <string>

#include "planguard/domain.hpp"
#include "planguard/gateway.hpp"
#include "planguard/prompts.hpp"

namespace planguard {

class UnknownCall : public Error {
public:
    UnknownCall(const std::string& tool, const std::string& canonical_input)
        : Error("no scripted observation for tool '" + tool + "' with input " +
                canonical_input) {}
};

class MalformedObservation : public Error {
public:
    explicit MalformedObservation(const std::string& message) : Error(message) {}
};

struct ScriptedToolTable {
    std::map<std::pair<std::string, std::string>, Document> exact;  // (tool, canonical input)
    std::map<std::string, Document> defaults;                       // per-tool fallback

    void add(const std::string& tool, const Document& input, Document observation);
    void add_default(const std::string& tool, Document observation);
    void merge(const ScriptedToolTable& other);

    // File format: a JSON list of {tool, input, observation} triples and
    // {tool, default_observation} fallbacks.
    static ScriptedToolTable parse(const nlohmann::json& j);
    static ScriptedToolTable load(const std::string& path);
};

enum class EmulatorKind { Scripted, ModelBacked };

struct EmulatorConfig {
    EmulatorKind kind = EmulatorKind::Scripted;
    std::optional<ScriptedToolTable> table;  // required when scripted
    std::optional<std::string> model;        // required when model-backed
};

// Scripted: exact-key lookup, then the per-tool default, else UnknownCall.
// Model-backed: one gateway exchange (two on one re-ask); replies wrapped in
// prose are salvaged by extracting the first balanced braced document. The
// gateway may be null for scripted configs.
Document emulate(const EmulatorConfig& cfg, const ToolSpec& spec, const Action& action,
                 const Trajectory& t, Gateway* gateway,
                 const PromptLibrary& prompts = PromptLibrary::builtin());

}  // namespace planguard
