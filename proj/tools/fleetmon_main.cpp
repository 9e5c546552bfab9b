#include "fleetmon/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"fleetmon - unsupervised fleet fault detection experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed_override = 0;
    bool has_seed = false;
    std::string out_override;
    int parallel_override = 0;
    std::vector<int> thresholds;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path, "experiment config file")->required();
        cmd->add_option("--seed", seed_override, "override the config seed")->each([&](const std::string&) {
            has_seed = true;
        });
        cmd->add_option("--out", out_override, "override the output directory");
    };

    auto* generate = app.add_subcommand("generate", "write a synthetic fleet (CSVs + manifest)");
    add_common(generate);
    auto* run = app.add_subcommand("run", "run the configured strategies and write reports");
    add_common(run);
    run->add_option("-j,--parallel", parallel_override, "worker pool size");
    auto* sweep = app.add_subcommand("sweep", "valid-pair counts per fp threshold from all-pairs outputs");
    add_common(sweep);
    sweep->add_option("--thresholds", thresholds, "fp thresholds in percent (default 1..25)");
    auto* report = app.add_subcommand("report", "rebuild and print the summary from report CSVs");
    add_common(report);

    CLI11_PARSE(app, argc, argv);

    try {
        fleetmon::ExperimentConfig cfg = fleetmon::load_experiment_config(config_path);
        if (has_seed) cfg.seed = seed_override;
        if (!out_override.empty()) cfg.output_dir = out_override;
        if (parallel_override > 0) cfg.parallelism = parallel_override;

        if (generate->parsed()) return fleetmon::cmd_generate(cfg);
        if (run->parsed()) return fleetmon::cmd_run(cfg);
        if (sweep->parsed()) return fleetmon::cmd_sweep(cfg, thresholds);
        if (report->parsed()) return fleetmon::cmd_report(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
