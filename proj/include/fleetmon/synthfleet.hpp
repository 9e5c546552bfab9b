#pragma once

#include "fleetmon/dataset.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fleetmon {

// One operating regime: per-signal mean plus a mixing of the shared latent
// factors that gives the signals their correlation structure.
struct RegimeSpec {
    Vector mean;    // n_signals
    Matrix mixing;  // n_signals x n_factors
};

struct RegimeSwitch {
    Duration start = 0;  // relative to series start
    int regime = 0;
};

struct FaultSpec {
    Duration time = 0;  // expert detection instant, relative to series start
    std::vector<Eigen::Index> signals;
    double shift_std_units = 4.0;  // in units of the healthy per-signal std
    Duration drift = 2 * kSecondsPerDay;
};

struct UnitConfig {
    std::string unit_id;
    std::vector<RegimeSpec> regimes;
    std::vector<RegimeSwitch> schedule;  // must start at 0, strictly increasing
    std::optional<FaultSpec> fault;
    // strength of the unit-specific monotone per-signal warp, in [0, 1)
    double distortion = 0.0;
};

struct FleetConfig {
    Eigen::Index n_signals = 24;
    int n_factors = 3;
    Duration period = 300;  // 5-minute sampling
    Duration duration = 360 * kSecondsPerDay;
    TimePoint start_time = 1420070400;  // 2015-01-01T00:00:00Z
    std::vector<Duration> factor_periods{kSecondsPerDay, 5 * kSecondsPerDay, 30 * kSecondsPerDay};
    std::vector<double> factor_amplitudes{1.0, 0.7, 0.5};
    double noise_scale = 0.05;
    std::vector<UnitConfig> units;
};

UnitSeries generate_unit(const FleetConfig& cfg, std::size_t unit_index, std::uint64_t seed);

struct GeneratedFleet {
    FleetManifest manifest;
    std::string manifest_path;
    std::string ground_truth_path;
};

// Writes one CSV per unit plus the manifest; ground truth (fault instants,
// regime schedules, affected signals) goes to a side file that the detection
// strategies never read.
GeneratedFleet generate_fleet(const FleetConfig& cfg, std::uint64_t seed, const std::string& out_dir);

// Knobs for the benchmark fleet: a handful of faulted target units that
// switch regime mid-year plus healthy source units that saw both regimes,
// with per-unit regime-direction jitter and sensor warps controlling how
// dissimilar the fleet is.
struct ScenarioParams {
    int n_units = 10;
    int n_faulted = 2;
    Eigen::Index n_signals = 24;
    int n_factors = 3;
    Duration period = 3600;
    Duration duration = 360 * kSecondsPerDay;
    Duration regime_change = 90 * kSecondsPerDay;  // faulted units switch here
    Duration fault_at = 315 * kSecondsPerDay;
    double fault_shift_std = 4.0;
    int fault_signal_count = 3;
    Duration fault_drift = 2 * kSecondsPerDay;
    double noise_scale = 0.05;
    double regime_jitter = 0.35;   // per-unit jitter of the regime-shift direction
    double distortion_max = 0.55;  // strongest per-unit warp in the fleet
    int n_similar_sources = 2;     // sources kept close to the targets
};

FleetConfig make_scenario(const ScenarioParams& params, std::uint64_t seed);

}  // namespace fleetmon
