#pragma once

#include "fleetmon/strategies.hpp"
#include "fleetmon/synthfleet.hpp"

#include <map>
#include <string>
#include <vector>

namespace fleetmon {

// Plain-text experiment configuration: `key = value` lines grouped by
// optional `[section]` headers, `#` comments. Keys are exposed as
// "section.key" ("" section for the preamble).
std::map<std::string, std::string> parse_key_value_file(const std::string& path);

struct ExperimentConfig {
    std::string output_dir = "out";
    std::string fleet_dir;      // defaults to <output_dir>/fleet
    std::string manifest_path;  // defaults to <fleet_dir>/manifest.json
    std::uint64_t seed = 42;
    int parallelism = 1;
    std::vector<std::string> strategies{"H-9m", "H-2m", "H-Inc", "H-H", "H-M", "UFA"};
    bool all_pairs = false;
    HelmHyper hyper;
    TrainConfig ufan;
    std::vector<double> r_grid{0.05, 0.10, 0.15, 0.20, 0.25};
    ScenarioParams fleet;
};

// Relative paths in the file resolve against the config file's directory.
ExperimentConfig load_experiment_config(const std::string& path);

int cmd_generate(const ExperimentConfig& cfg);
int cmd_run(const ExperimentConfig& cfg);
int cmd_sweep(const ExperimentConfig& cfg, const std::vector<int>& thresholds);
int cmd_report(const ExperimentConfig& cfg);

// reports.csv helpers shared by cmd_run, cmd_report and the tests
void write_reports_csv(const std::vector<DetectionReport>& reports, const std::string& path);
std::vector<DetectionReport> read_reports_csv(const std::string& path);
void write_summary_csv(const std::vector<DetectionReport>& reports,
                       const std::vector<std::string>& strategies, const std::string& path);

}  // namespace fleetmon
