#pragma once

// Chain-of-hindsight data assembly from inspector interactions. Each
// inspected step-round becomes one record: accepted steps yield safe
// records, each rejection round yields an unsafe record carrying its
// feedback. Training examples serialize the record with the feedback block
// between the task content and the target step, so a trainer can condition
// generation on both the task and the inspector feedback.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "planguard/constitution.hpp"
#include "planguard/domain.hpp"
#include "planguard/inspector.hpp"
#include "planguard/pipeline.hpp"

namespace planguard {

struct HindsightRecord {
    std::string scenario_id;
    std::string instruction;
    std::vector<Step> trajectory_prefix;  // accepted steps before this proposal
    std::optional<Regulation> regulation;  // violated reg for unsafe records,
                                           // top relevant for safe; absent when
                                           // none was relevant
    int step_index = 0;
    Action step;
    std::optional<std::string> rationale;
    ComplianceVerdict feedback;
};

enum class Polarity { Positive, Negative };

std::string to_string(Polarity p);
Polarity polarity_from_string(std::string_view s);

struct TrainingExample {
    std::string input;   // task block, then feedback block
    std::string target;  // the step's two-line action rendering
    Polarity polarity = Polarity::Positive;
    std::string scenario_id;
    int step_index = 0;
};

// Block markers used in TrainingExample::input, in this order.
inline constexpr const char* kInstructionMarker = "Instruction:";
inline constexpr const char* kTrajectoryMarker = "Trajectory:";
inline constexpr const char* kRegulationMarker = "Regulation:";
inline constexpr const char* kFeedbackMarker = "Feedback:";
inline constexpr const char* kNoPriorSteps = "(no prior steps)";

std::vector<HindsightRecord> collect_records(const RunTranscript& transcript);

TrainingExample format_training_example(const HindsightRecord& record);

// Line-delimited {input, target, polarity, scenario_id, step_index}.
std::string serialize_dataset(std::span<const TrainingExample> examples);
size_t export_dataset(std::span<const TrainingExample> examples, const std::string& path);
std::vector<TrainingExample> parse_dataset(const std::string& text);
std::vector<TrainingExample> load_dataset(const std::string& path);

}  // namespace planguard
