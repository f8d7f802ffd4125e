#include "planguard/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <ostream>
#include <thread>

#include "planguard/hindsight.hpp"

namespace planguard {

namespace fs = std::filesystem;

std::string to_string(Mode m) {
    switch (m) {
        case Mode::Full: return "full";
        case Mode::PromptingOnly: return "prompting_only";
        case Mode::InspectionOnly: return "inspection_only";
        case Mode::None: return "none";
        case Mode::PreplanningEmit: return "preplanning_emit";
    }
    return "full";
}

Mode mode_from_string(std::string_view s) {
    if (s == "full") return Mode::Full;
    if (s == "prompting_only") return Mode::PromptingOnly;
    if (s == "inspection_only") return Mode::InspectionOnly;
    if (s == "none") return Mode::None;
    if (s == "preplanning_emit") return Mode::PreplanningEmit;
    throw ConfigError("mode", "unknown value '" + std::string(s) + "'");
}

StrategyFlags flags_for_mode(Mode m) {
    switch (m) {
        case Mode::Full: return {true, true, true};
        case Mode::PromptingOnly: return {true, false, false};
        case Mode::InspectionOnly: return {false, true, false};
        case Mode::None: return {false, false, false};
        case Mode::PreplanningEmit: return {false, false, false};
    }
    return {false, false, false};
}

CliConfig parse_cli_config(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config", "top level must be a map");
    CliConfig cfg;
    cfg.constitution_path = j.value("constitution", "");
    cfg.scenario_dir = j.value("scenarios", "");
    cfg.out_dir = j.value("out", cfg.out_dir);
    cfg.prompt_dir = j.value("prompts", "");
    cfg.tool_table_path = j.value("tool_table", "");
    cfg.mock_script_path = j.value("mock_script", "");
    cfg.backend = j.value("backend", cfg.backend);
    cfg.endpoint = j.value("endpoint", "");
    cfg.endpoint_path = j.value("endpoint_path", cfg.endpoint_path);
    if (j.contains("mode")) cfg.mode = mode_from_string(j.at("mode").get<std::string>());
    cfg.top_k = j.value("top_k", cfg.top_k);
    cfg.max_steps = j.value("max_steps", cfg.max_steps);
    cfg.max_rounds = j.value("max_rounds", cfg.max_rounds);
    cfg.runs = j.value("runs", cfg.runs);
    if (j.contains("comparator")) {
        cfg.comparator = comparator_from_string(j.at("comparator").get<std::string>());
    }
    cfg.judges = j.value("judges", cfg.judges);
    cfg.qa_styles = j.value("qa_styles", cfg.qa_styles);
    cfg.parallel = j.value("parallel", cfg.parallel);
    if (j.contains("domain") && !j.at("domain").is_null()) {
        cfg.domain_filter = domain_from_string(j.at("domain").get<std::string>());
    }
    cfg.planner_model = j.value("planner_model", cfg.planner_model);
    cfg.inspector_model = j.value("inspector_model", cfg.inspector_model);
    cfg.judge_model = j.value("judge_model", cfg.judge_model);
    cfg.emulator_kind = j.value("emulator", cfg.emulator_kind);
    cfg.emulator_model = j.value("emulator_model", "");
    return cfg;
}

CliConfig load_cli_config(const std::string& path) {
    nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw ConfigError("config", "'" + path + "' is not valid JSON");
    return parse_cli_config(j);
}

nlohmann::json config_snapshot(const CliConfig& cfg, bool deterministic) {
    const StrategyFlags flags = flags_for_mode(cfg.mode);
    nlohmann::json j{
        {"mode", to_string(cfg.mode)},
        {"flags",
         {{"in_planning", flags.in_planning},
          {"post_inspection", flags.post_inspection},
          {"hindsight_assembly", flags.hindsight_assembly}}},
        {"backend", cfg.backend},
        {"comparator", to_string(cfg.comparator)},
        {"deterministic", deterministic},
        {"judges", cfg.judges},
        {"top_k", cfg.top_k},
        {"max_steps", cfg.max_steps},
        {"max_rounds", cfg.max_rounds},
        {"runs", cfg.runs},
        {"qa_styles", cfg.qa_styles},
        {"parallel", cfg.parallel},
        {"emulator", cfg.emulator_kind},
        {"models",
         {{"planner", cfg.planner_model},
          {"inspector", cfg.inspector_model},
          {"judge", cfg.judge_model}}},
    };
    if (cfg.domain_filter) j["domain"] = to_string(*cfg.domain_filter);
    return j;
}

namespace {

ScriptedToolTable load_tool_tables(const std::string& path) {
    ScriptedToolTable table;
    if (path.empty()) return table;
    if (fs::is_directory(path)) {
        std::vector<std::string> files;
        for (const auto& e : fs::directory_iterator(path)) {
            if (e.path().extension() == ".json") files.push_back(e.path().string());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) table.merge(ScriptedToolTable::load(f));
        return table;
    }
    return ScriptedToolTable::load(path);
}

struct Runtime {
    std::unique_ptr<Gateway> gateway;
    RunConfig run_config;
    bool strict_mock = false;
};

Runtime build_runtime(const CliConfig& cfg) {
    Runtime rt;
    rt.run_config.flags = flags_for_mode(cfg.mode);
    rt.run_config.top_k = cfg.top_k;
    rt.run_config.max_steps = cfg.max_steps;
    rt.run_config.max_rounds = cfg.max_rounds;
    rt.run_config.runs_per_scenario = cfg.runs;
    rt.run_config.comparator = cfg.comparator;
    rt.run_config.enable_judges = cfg.judges;
    rt.run_config.planner_model = cfg.planner_model;
    rt.run_config.inspector_model = cfg.inspector_model;
    rt.run_config.judge_model = cfg.judge_model;
    rt.run_config.prompts = cfg.prompt_dir.empty() ? PromptLibrary::builtin()
                                                   : PromptLibrary::load(cfg.prompt_dir);

    if (cfg.emulator_kind == "scripted") {
        rt.run_config.emulator.kind = EmulatorKind::Scripted;
        if (cfg.tool_table_path.empty()) {
            throw ConfigError("tool_table", "scripted emulator needs a tool table");
        }
        rt.run_config.emulator.table = load_tool_tables(cfg.tool_table_path);
    } else if (cfg.emulator_kind == "model_backed") {
        rt.run_config.emulator.kind = EmulatorKind::ModelBacked;
        if (cfg.emulator_model.empty()) {
            throw ConfigError("emulator_model", "model-backed emulator needs a model");
        }
        rt.run_config.emulator.model = cfg.emulator_model;
    } else {
        throw ConfigError("emulator", "unknown kind '" + cfg.emulator_kind + "'");
    }

    if (cfg.backend == "mock") {
        if (cfg.mock_script_path.empty()) {
            throw ConfigError("mock_script", "mock backend needs a script");
        }
        MockScript script = MockScript::load(cfg.mock_script_path);
        rt.strict_mock = script.strict;
        rt.gateway = std::make_unique<Gateway>(std::make_unique<MockBackend>(std::move(script)));
    } else {
        if (cfg.endpoint.empty()) {
            throw ConfigError("endpoint", "live backend needs an endpoint URL");
        }
        HttpBackendConfig hc;
        hc.name = cfg.backend;
        hc.path = cfg.endpoint_path;
        rt.gateway = std::make_unique<Gateway>(std::make_unique<HttpChatBackend>(
            make_httplib_transport(cfg.endpoint), hc));
    }
    return rt;
}

int effective_parallel(const CliConfig& cfg, bool strict_mock) {
    if (strict_mock) return 1;  // strict scripts consume entries in order
    if (cfg.parallel > 0) return cfg.parallel;
    const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
    return static_cast<int>(std::min(cores, 8u));
}

std::vector<Scenario> load_scenarios(const CliConfig& cfg) {
    if (cfg.scenario_dir.empty()) throw ConfigError("scenarios", "path is required");
    std::vector<Scenario> scenarios = load_scenario_suite(cfg.scenario_dir);
    if (cfg.domain_filter) {
        std::erase_if(scenarios,
                      [&](const Scenario& s) { return s.domain != *cfg.domain_filter; });
        if (scenarios.empty()) {
            throw ConfigError("domain", "no scenario matches domain '" +
                                            to_string(*cfg.domain_filter) + "'");
        }
    }
    return scenarios;
}

std::string run_file_name(const RunTranscript& rt) {
    return rt.scenario_id + ".run" + std::to_string(rt.run_index) + ".json";
}

// QA corpus over every regulation; one generate_qa call per regulation.
std::vector<QARecord> qa_corpus_for(const Constitution& constitution, Gateway& gateway,
                                    int styles, const PromptLibrary& prompts) {
    std::vector<QARecord> corpus;
    for (const auto& reg : constitution.regulations) {
        auto records = generate_qa(reg, gateway, styles, prompts, "qa-gen");
        corpus.insert(corpus.end(), records.begin(), records.end());
    }
    return corpus;
}

}  // namespace

int cmd_run(const CliConfig& cfg, std::ostream& out) {
    try {
        if (cfg.constitution_path.empty()) {
            throw ConfigError("constitution", "path is required");
        }
        const Constitution constitution = load_constitution(cfg.constitution_path);
        const std::vector<Scenario> scenarios = load_scenarios(cfg);
        Runtime rt = build_runtime(cfg);
        const int width = effective_parallel(cfg, rt.strict_mock);

        SuiteResult suite = run_suite(scenarios, rt.run_config, constitution,
                                      *rt.gateway, to_string(cfg.mode), width);

        const fs::path out_dir(cfg.out_dir);
        write_file((out_dir / "manifest.json").string(),
                   config_snapshot(cfg, rt.gateway->deterministic()).dump(2) + "\n");
        for (const auto& run : suite.runs) {
            write_file((out_dir / "runs" / run_file_name(run)).string(),
                       serialize_run_transcript(run));
        }
        rt.gateway->write_transcript((out_dir / "gateway.jsonl").string());
        write_file((out_dir / "report.txt").string(), render_report_table(suite.report));
        write_file((out_dir / "report.csv").string(), render_report_csv(suite.report));

        if (rt.run_config.flags.hindsight_assembly || cfg.mode == Mode::PreplanningEmit) {
            std::vector<TrainingExample> examples;
            for (const auto& run : suite.runs) {
                for (const auto& rec : collect_records(run)) {
                    examples.push_back(format_training_example(rec));
                }
            }
            const size_t n = export_dataset(
                examples, (out_dir / "datasets" / "hindsight.jsonl").string());
            out << "hindsight dataset: " << n << " examples\n";
        }
        if (cfg.mode == Mode::PreplanningEmit) {
            auto corpus =
                qa_corpus_for(constitution, *rt.gateway, cfg.qa_styles, rt.run_config.prompts);
            const size_t n = export_qa_corpus(
                corpus, (out_dir / "datasets" / "qa_corpus.jsonl").string());
            out << "qa corpus: " << n << " records\n";
        }

        out << render_report_table(suite.report);
        int infra = 0;
        for (const auto& run : suite.runs) {
            if (run.error) {
                ++infra;
                out << "run failed (" << run.scenario_id << " run " << run.run_index
                    << "): " << *run.error << "\n";
            }
        }
        out << "run directory: " << cfg.out_dir << "\n";
        out << suite.runs.size() << " runs, " << infra << " infrastructure failures\n";
        return 0;
    } catch (const Error& e) {
        out << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_report(const std::string& run_dir, std::ostream& out) {
    try {
        const fs::path dir(run_dir);
        std::string mode = "unknown";
        {
            nlohmann::json manifest =
                nlohmann::json::parse(read_file((dir / "manifest.json").string()),
                                      nullptr, false);
            if (!manifest.is_discarded()) mode = manifest.value("mode", mode);
        }
        const fs::path runs_dir = dir / "runs";
        if (!fs::is_directory(runs_dir)) {
            throw IoError("run directory '" + run_dir + "' has no runs/ subdirectory");
        }
        std::vector<std::string> files;
        for (const auto& e : fs::directory_iterator(runs_dir)) {
            if (e.path().extension() == ".json") files.push_back(e.path().string());
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) throw IoError("run directory holds no transcripts");

        std::vector<RunTranscript> runs;
        for (const auto& f : files) runs.push_back(parse_run_transcript(read_file(f)));

        // Group by scenario id, keeping first-seen order of the sorted files.
        std::vector<std::string> order;
        for (const auto& rt : runs) {
            if (std::find(order.begin(), order.end(), rt.scenario_id) == order.end()) {
                order.push_back(rt.scenario_id);
            }
        }
        std::vector<ScenarioScore> scores;
        for (const auto& id : order) {
            std::vector<RunTranscript> of_scenario;
            for (const auto& rt : runs) {
                if (rt.scenario_id == id) of_scenario.push_back(rt);
            }
            Scenario shim;
            shim.id = id;
            shim.domain = of_scenario.front().domain;
            scores.push_back(score_scenario(shim, of_scenario));
        }
        AggregateReport report = aggregate_report(scores, mode);
        out << render_report_table(report);
        int halted = 0, infra = 0;
        for (const auto& rt : runs) {
            if (rt.trajectory.halt_reason == HaltReason::Infrastructure) {
                ++infra;
            } else if (rt.trajectory.status == TrajectoryStatus::Halted) {
                ++halted;
            }
        }
        out << runs.size() << " runs, " << halted << " safety halts, " << infra
            << " infrastructure halts\n";
        return 0;
    } catch (const Error& e) {
        out << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_emit_datasets(const CliConfig& cfg, const std::string& run_dir,
                      std::ostream& out) {
    try {
        const fs::path out_dir(cfg.out_dir);
        bool emitted = false;

        if (!run_dir.empty()) {
            const fs::path runs_dir = fs::path(run_dir) / "runs";
            std::vector<TrainingExample> examples;
            if (fs::is_directory(runs_dir)) {
                std::vector<std::string> files;
                for (const auto& e : fs::directory_iterator(runs_dir)) {
                    if (e.path().extension() == ".json") files.push_back(e.path().string());
                }
                std::sort(files.begin(), files.end());
                for (const auto& f : files) {
                    RunTranscript rt = parse_run_transcript(read_file(f));
                    for (const auto& rec : collect_records(rt)) {
                        examples.push_back(format_training_example(rec));
                    }
                }
            }
            const size_t n = export_dataset(
                examples, (out_dir / "datasets" / "hindsight.jsonl").string());
            out << "hindsight dataset: " << n << " examples -> "
                << (out_dir / "datasets" / "hindsight.jsonl").string() << "\n";
            emitted = true;
        }

        if (!cfg.constitution_path.empty()) {
            const Constitution constitution = load_constitution(cfg.constitution_path);
            Runtime rt = build_runtime(cfg);
            auto corpus = qa_corpus_for(constitution, *rt.gateway, cfg.qa_styles,
                                        rt.run_config.prompts);
            const size_t n = export_qa_corpus(
                corpus, (out_dir / "datasets" / "qa_corpus.jsonl").string());
            out << "qa corpus: " << n << " records -> "
                << (out_dir / "datasets" / "qa_corpus.jsonl").string() << "\n";
            emitted = true;
        }

        if (!emitted) {
            throw ConfigError("emit", "need a run directory and/or a constitution path");
        }
        return 0;
    } catch (const Error& e) {
        out << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_validate(const CliConfig& cfg, std::ostream& out) {
    int breaches = 0;
    auto report = [&](const std::string& what) {
        ++breaches;
        out << "breach: " << what << "\n";
    };

    if (!cfg.constitution_path.empty()) {
        try {
            load_constitution(cfg.constitution_path);
        } catch (const Error& e) {
            report(std::string("constitution: ") + e.what());
        }
    }
    if (!cfg.scenario_dir.empty()) {
        try {
            const auto manifest = load_suite_manifest(cfg.scenario_dir);
            for (const auto& entry : manifest) {
                try {
                    Scenario s = load_scenario_file(
                        (fs::path(cfg.scenario_dir) / entry.file).string());
                    if (s.id != entry.id) {
                        report("scenario file '" + entry.file + "' holds id '" + s.id +
                               "', manifest says '" + entry.id + "'");
                    }
                } catch (const Error& e) {
                    report(std::string("scenario '") + entry.id + "': " + e.what());
                }
            }
        } catch (const Error& e) {
            report(std::string("scenario suite: ") + e.what());
        }
    }
    if (!cfg.tool_table_path.empty()) {
        try {
            load_tool_tables(cfg.tool_table_path);
        } catch (const Error& e) {
            report(std::string("tool table: ") + e.what());
        }
    }
    out << breaches << " errors\n";
    return breaches == 0 ? 0 : 1;
}

}  // namespace planguard
