#include "planguard/hindsight.hpp"

#include <sstream>

namespace planguard {

std::string to_string(Polarity p) {
    return p == Polarity::Positive ? "positive" : "negative";
}

Polarity polarity_from_string(std::string_view s) {
    if (s == "positive") return Polarity::Positive;
    if (s == "negative") return Polarity::Negative;
    throw SchemaError("polarity: unknown value '" + std::string(s) + "'");
}

std::vector<HindsightRecord> collect_records(const RunTranscript& transcript) {
    std::vector<HindsightRecord> records;
    for (size_t proposal = 0; proposal < transcript.outcomes.size(); ++proposal) {
        const InspectionOutcome& outcome = transcript.outcomes[proposal];
        // Proposal i was inspected with the first i accepted steps in place.
        std::vector<Step> prefix(transcript.trajectory.steps.begin(),
                                 transcript.trajectory.steps.begin() +
                                     std::min(proposal, transcript.trajectory.steps.size()));

        for (const auto& round : outcome.rounds) {
            HindsightRecord rec;
            rec.scenario_id = transcript.scenario_id;
            rec.instruction = transcript.instruction;
            rec.trajectory_prefix = prefix;
            rec.regulation = round.violated_regulation;
            rec.step_index = static_cast<int>(proposal);
            rec.step = round.rejected_step;
            rec.feedback = round.feedback;
            records.push_back(std::move(rec));
        }
        if (outcome.accepted) {
            HindsightRecord rec;
            rec.scenario_id = transcript.scenario_id;
            rec.instruction = transcript.instruction;
            rec.trajectory_prefix = prefix;
            rec.regulation = outcome.accepted->top_relevant;
            rec.step_index = static_cast<int>(proposal);
            rec.step = outcome.accepted->action;
            rec.feedback = outcome.accepted->verdict;
            records.push_back(std::move(rec));
        }
    }
    return records;
}

TrainingExample format_training_example(const HindsightRecord& record) {
    TrainingExample ex;
    ex.scenario_id = record.scenario_id;
    ex.step_index = record.step_index;
    ex.polarity = record.feedback.verdict == Verdict::Safe ? Polarity::Positive
                                                           : Polarity::Negative;

    std::string input;
    input += std::string(kInstructionMarker) + "\n" + record.instruction + "\n\n";
    input += std::string(kTrajectoryMarker) + "\n";
    if (record.trajectory_prefix.empty()) {
        input += kNoPriorSteps;
        input += "\n";
    } else {
        for (const auto& step : record.trajectory_prefix) {
            const std::string i = std::to_string(step.index);
            input += "Action " + i + ": " + step.action.tool + "\n";
            input += "Action " + i + " Input: " + canonicalize(step.action.input) + "\n";
            if (step.observation) {
                input += "Observation: " + canonicalize(*step.observation) + "\n";
            }
        }
    }
    input += "\n";
    input += std::string(kRegulationMarker) + "\n";
    if (record.regulation) {
        input += "[" + record.regulation->id + "] " + record.regulation->text + "\n";
    } else {
        input += "(none)\n";
    }
    input += "\n";
    input += std::string(kFeedbackMarker) + " " + to_string(record.feedback.verdict) + "\n";
    input += record.feedback.explanation + "\n";
    ex.input = std::move(input);

    const std::string i = std::to_string(record.step_index);
    ex.target = "Action " + i + ": " + record.step.tool + "\nAction " + i +
                " Input: " + canonicalize(record.step.input);
    return ex;
}

std::string serialize_dataset(std::span<const TrainingExample> examples) {
    std::string out;
    for (const auto& ex : examples) {
        nlohmann::json j{{"input", ex.input},
                         {"target", ex.target},
                         {"polarity", to_string(ex.polarity)},
                         {"scenario_id", ex.scenario_id},
                         {"step_index", ex.step_index}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

size_t export_dataset(std::span<const TrainingExample> examples, const std::string& path) {
    write_file(path, serialize_dataset(examples));
    return examples.size();
}

std::vector<TrainingExample> parse_dataset(const std::string& text) {
    std::vector<TrainingExample> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw SchemaError("dataset line is not valid JSON");
        TrainingExample ex;
        ex.input = j.at("input").get<std::string>();
        ex.target = j.at("target").get<std::string>();
        ex.polarity = polarity_from_string(j.at("polarity").get<std::string>());
        ex.scenario_id = j.at("scenario_id").get<std::string>();
        ex.step_index = j.at("step_index").get<int>();
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<TrainingExample> load_dataset(const std::string& path) {
    return parse_dataset(read_file(path));
}

}  // namespace planguard
