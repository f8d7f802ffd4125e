// planguard command-line entry point.
//
//   planguard run           --config cfg.json [overrides]
//   planguard report        --run-dir out/
//   planguard emit-datasets --config cfg.json [--run-dir out/]
//   planguard validate      --config cfg.json

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "planguard/cli.hpp"

namespace {

struct Overrides {
    std::string config_path;
    std::string mode;
    std::string domain;
    std::string backend;
    std::string mock_script;
    std::string out;
    int top_k = -1;
    int max_steps = -1;
    int max_rounds = -1;
    int runs = -1;
    int parallel = -1;
};

void add_common_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "Config file (JSON)");
    cmd->add_option("--mode", o.mode,
                    "full | prompting_only | inspection_only | none | preplanning_emit");
    cmd->add_option("--domain", o.domain, "Only scenarios of this domain");
    cmd->add_option("--top-k", o.top_k, "Regulations retrieved per proposal");
    cmd->add_option("--max-steps", o.max_steps, "Step budget per run");
    cmd->add_option("--max-rounds", o.max_rounds, "Revision rounds per inspection");
    cmd->add_option("--runs", o.runs, "Runs per scenario");
    cmd->add_option("--backend", o.backend, "mock or a live backend name");
    cmd->add_option("--mock-script", o.mock_script, "Mock script file");
    cmd->add_option("--parallel", o.parallel, "Worker pool width");
    cmd->add_option("--out", o.out, "Output / run directory");
}

// Flags win over the config file.
planguard::CliConfig merge(const Overrides& o) {
    planguard::CliConfig cfg;
    if (!o.config_path.empty()) cfg = planguard::load_cli_config(o.config_path);
    if (!o.mode.empty()) cfg.mode = planguard::mode_from_string(o.mode);
    if (!o.domain.empty()) cfg.domain_filter = planguard::domain_from_string(o.domain);
    if (!o.backend.empty()) cfg.backend = o.backend;
    if (!o.mock_script.empty()) cfg.mock_script_path = o.mock_script;
    if (!o.out.empty()) cfg.out_dir = o.out;
    if (o.top_k >= 0) cfg.top_k = o.top_k;
    if (o.max_steps >= 0) cfg.max_steps = o.max_steps;
    if (o.max_rounds >= 0) cfg.max_rounds = o.max_rounds;
    if (o.runs >= 0) cfg.runs = o.runs;
    if (o.parallel >= 0) cfg.parallel = o.parallel;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Constitution-enforcing safety harness for tool-using planning agents"};
    app.require_subcommand(1);

    Overrides o;
    std::string run_dir;

    CLI::App* run = app.add_subcommand("run", "Run a scenario suite");
    add_common_flags(run, o);

    CLI::App* report = app.add_subcommand("report", "Render tables from a run directory");
    report->add_option("--run-dir", run_dir, "Run directory")->required();

    CLI::App* emit = app.add_subcommand("emit-datasets",
                                        "Emit QA corpus and/or hindsight dataset");
    add_common_flags(emit, o);
    emit->add_option("--run-dir", run_dir, "Run directory to harvest hindsight from");

    CLI::App* validate = app.add_subcommand("validate", "Validate input files");
    add_common_flags(validate, o);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return planguard::cmd_run(merge(o), std::cout);
        if (report->parsed()) return planguard::cmd_report(run_dir, std::cout);
        if (emit->parsed()) return planguard::cmd_emit_datasets(merge(o), run_dir, std::cout);
        if (validate->parsed()) return planguard::cmd_validate(merge(o), std::cout);
    } catch (const planguard::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
