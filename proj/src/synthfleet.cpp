#include "fleetmon/synthfleet.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace fleetmon {

namespace {

void validate_schedule(const UnitConfig& unit, Duration duration) {
    if (unit.schedule.empty() || unit.schedule.front().start != 0)
        throw std::invalid_argument("unit '" + unit.unit_id + "': schedule must start at 0");
    for (std::size_t i = 0; i < unit.schedule.size(); ++i) {
        if (i > 0 && unit.schedule[i].start <= unit.schedule[i - 1].start)
            throw std::invalid_argument("unit '" + unit.unit_id + "': schedule not increasing");
        if (unit.schedule[i].start >= duration)
            throw std::invalid_argument("unit '" + unit.unit_id + "': regime switch beyond duration");
        if (unit.schedule[i].regime < 0 ||
            static_cast<std::size_t>(unit.schedule[i].regime) >= unit.regimes.size())
            throw std::invalid_argument("unit '" + unit.unit_id + "': unknown regime id");
    }
}

// Healthy per-signal standard deviation implied by the generator terms: the
// sinusoid factors contribute amp^2/2 through the mixing, the noise adds its
// own variance.
Vector theoretical_std(const FleetConfig& cfg, const RegimeSpec& regime) {
    Vector var = Vector::Constant(cfg.n_signals, cfg.noise_scale * cfg.noise_scale);
    for (int j = 0; j < cfg.n_factors; ++j)
        var += 0.5 * cfg.factor_amplitudes[static_cast<std::size_t>(j)] *
               cfg.factor_amplitudes[static_cast<std::size_t>(j)] *
               regime.mixing.col(j).array().square().matrix();
    return var.cwiseSqrt();
}

}  // namespace

UnitSeries generate_unit(const FleetConfig& cfg, std::size_t unit_index, std::uint64_t seed) {
    if (unit_index >= cfg.units.size()) throw std::invalid_argument("generate_unit: bad unit index");
    const UnitConfig& unit = cfg.units[unit_index];
    if (static_cast<int>(cfg.factor_periods.size()) != cfg.n_factors ||
        static_cast<int>(cfg.factor_amplitudes.size()) != cfg.n_factors)
        throw std::invalid_argument("generate_unit: factor parameter count mismatch");
    validate_schedule(unit, cfg.duration);
    for (const auto& regime : unit.regimes)
        if (regime.mean.size() != cfg.n_signals || regime.mixing.rows() != cfg.n_signals ||
            regime.mixing.cols() != cfg.n_factors)
            throw std::invalid_argument("generate_unit: regime dimensions mismatch");
    if (unit.fault) {
        // shift 0 is allowed and produces a null fault, useful as a control
        if (unit.fault->signals.empty() || unit.fault->shift_std_units < 0.0)
            throw std::invalid_argument("generate_unit: fault needs signals and a nonnegative shift");
        for (Eigen::Index s : unit.fault->signals)
            if (s < 0 || s >= cfg.n_signals) throw std::invalid_argument("generate_unit: fault signal out of range");
    }

    Rng rng(derive_seed(seed, unit_index));
    std::vector<double> phases;
    for (int j = 0; j < cfg.n_factors; ++j) phases.push_back(rng.uniform(0.0, 2.0 * M_PI));
    // warp anchor per signal, drawn near the regime-0 mean
    Vector warp_center(cfg.n_signals);
    for (Eigen::Index i = 0; i < cfg.n_signals; ++i)
        warp_center[i] = unit.regimes[0].mean[i] + 0.3 * rng.uniform(-1.0, 1.0);

    const auto n = static_cast<Eigen::Index>(cfg.duration / cfg.period);
    UnitSeries series;
    series.unit_id = unit.unit_id;
    series.timestamps.reserve(static_cast<std::size_t>(n));
    series.values.resize(n, cfg.n_signals);
    series.signal_names.reserve(static_cast<std::size_t>(cfg.n_signals));
    for (Eigen::Index i = 0; i < cfg.n_signals; ++i) series.signal_names.push_back("s" + std::to_string(i));
    if (unit.fault) series.fault_time = cfg.start_time + unit.fault->time;

    // per-regime fault shift in raw units (std is regime dependent)
    std::vector<Vector> stds;
    for (const auto& regime : unit.regimes) stds.push_back(theoretical_std(cfg, regime));

    std::size_t seg = 0;
    Vector factors(cfg.n_factors);
    for (Eigen::Index row = 0; row < n; ++row) {
        Duration offset = static_cast<Duration>(row) * cfg.period;
        while (seg + 1 < unit.schedule.size() && offset >= unit.schedule[seg + 1].start) ++seg;
        const int regime_id = unit.schedule[seg].regime;
        const RegimeSpec& regime = unit.regimes[static_cast<std::size_t>(regime_id)];

        for (int j = 0; j < cfg.n_factors; ++j) {
            double omega = 2.0 * M_PI / static_cast<double>(cfg.factor_periods[static_cast<std::size_t>(j)]);
            factors[j] = cfg.factor_amplitudes[static_cast<std::size_t>(j)] *
                         std::sin(omega * static_cast<double>(offset) + phases[static_cast<std::size_t>(j)]);
        }

        Vector x = regime.mean + regime.mixing * factors;
        if (cfg.noise_scale > 0.0)
            for (Eigen::Index i = 0; i < cfg.n_signals; ++i) x[i] += cfg.noise_scale * rng.normal();

        if (unit.fault && offset >= unit.fault->time) {
            double ramp = unit.fault->drift > 0
                              ? std::min(1.0, static_cast<double>(offset - unit.fault->time) /
                                                  static_cast<double>(unit.fault->drift))
                              : 1.0;
            for (Eigen::Index s : unit.fault->signals)
                x[s] += ramp * unit.fault->shift_std_units * stds[static_cast<std::size_t>(regime_id)][s];
        }

        if (unit.distortion > 0.0) {
            // monotone per-signal warp; derivative stays >= 1 - distortion > 0
            for (Eigen::Index i = 0; i < cfg.n_signals; ++i) {
                double scale = std::max(stds[static_cast<std::size_t>(regime_id)][i], 1e-6);
                x[i] += unit.distortion * scale * std::tanh((x[i] - warp_center[i]) / scale);
            }
        }

        series.timestamps.push_back(cfg.start_time + offset);
        series.values.row(row) = x;
    }
    return series;
}

GeneratedFleet generate_fleet(const FleetConfig& cfg, std::uint64_t seed, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    GeneratedFleet fleet;
    nlohmann::json truth;
    truth["units"] = nlohmann::json::array();
    for (std::size_t u = 0; u < cfg.units.size(); ++u) {
        UnitSeries series = generate_unit(cfg, u, seed);
        std::string csv_path = (fs::path(out_dir) / (series.unit_id + ".csv")).string();
        write_unit_csv(series, csv_path);

        ManifestEntry entry;
        entry.unit_id = series.unit_id;
        entry.csv_path = csv_path;
        entry.fault_time = series.fault_time;
        fleet.manifest.units.push_back(std::move(entry));

        nlohmann::json tu;
        tu["unit_id"] = series.unit_id;
        tu["fault_time"] =
            series.fault_time ? nlohmann::json(format_iso8601(*series.fault_time)) : nlohmann::json();
        tu["distortion"] = cfg.units[u].distortion;
        tu["schedule"] = nlohmann::json::array();
        for (const auto& sw : cfg.units[u].schedule)
            tu["schedule"].push_back({{"start_day", sw.start / kSecondsPerDay}, {"regime", sw.regime}});
        if (cfg.units[u].fault) {
            tu["fault_signals"] = cfg.units[u].fault->signals;
            tu["fault_shift_std"] = cfg.units[u].fault->shift_std_units;
        }
        truth["units"].push_back(std::move(tu));
    }

    fleet.manifest_path = (fs::path(out_dir) / "manifest.json").string();
    write_manifest(fleet.manifest, fleet.manifest_path);
    fleet.ground_truth_path = (fs::path(out_dir) / "ground_truth.json").string();
    std::ofstream out(fleet.ground_truth_path);
    if (!out) throw std::runtime_error("cannot write '" + fleet.ground_truth_path + "'");
    out << truth.dump(2) << '\n';
    return fleet;
}

FleetConfig make_scenario(const ScenarioParams& params, std::uint64_t seed) {
    if (params.n_units < 2 || params.n_faulted < 1 || params.n_faulted >= params.n_units)
        throw std::invalid_argument("make_scenario: need at least one target and one source");

    FleetConfig cfg;
    cfg.n_signals = params.n_signals;
    cfg.n_factors = params.n_factors;
    cfg.period = params.period;
    cfg.duration = params.duration;
    cfg.noise_scale = params.noise_scale;

    Rng rng(derive_seed(seed, hash_string("scenario")));

    // Shared base library: regime 1 shifts the means along a base direction
    // and remixes the factors.
    RegimeSpec base0;
    base0.mean.resize(cfg.n_signals);
    base0.mixing.resize(cfg.n_signals, cfg.n_factors);
    for (Eigen::Index i = 0; i < cfg.n_signals; ++i) {
        base0.mean[i] = rng.uniform(2.0, 6.0);
        for (int j = 0; j < cfg.n_factors; ++j) base0.mixing(i, j) = rng.uniform(-0.6, 0.6);
    }
    Vector base_shift(cfg.n_signals);
    for (Eigen::Index i = 0; i < cfg.n_signals; ++i)
        base_shift[i] = (rng.uniform01() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.3, 0.9);
    Matrix mixing_delta(cfg.n_signals, cfg.n_factors);
    for (Eigen::Index i = 0; i < cfg.n_signals; ++i)
        for (int j = 0; j < cfg.n_factors; ++j) mixing_delta(i, j) = rng.uniform(-0.25, 0.25);

    std::vector<Eigen::Index> fault_signals;
    for (int s = 0; s < params.fault_signal_count; ++s)
        fault_signals.push_back(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(cfg.n_signals))));

    for (int u = 0; u < params.n_units; ++u) {
        UnitConfig unit;
        char name[32];
        std::snprintf(name, sizeof(name), "unit_%02d", u);
        unit.unit_id = name;

        const bool faulted = u < params.n_faulted;
        // the first sources after the targets stay close to them; the rest
        // spread over a dissimilarity spectrum, with no perfect clones
        const bool similar = !faulted && (u - params.n_faulted) < params.n_similar_sources;

        Rng unit_rng(derive_seed(seed, hash_string(unit.unit_id)));
        double level = faulted   ? 0.0
                       : similar ? unit_rng.uniform(0.15, 0.3)
                                 : unit_rng.uniform(0.5, 1.0);
        double jitter = params.regime_jitter * level;
        double distortion = params.distortion_max * level;

        RegimeSpec r0 = base0;
        RegimeSpec r1;
        r1.mean = base0.mean + base_shift;
        r1.mixing = base0.mixing + mixing_delta;
        if (jitter > 0.0) {
            for (Eigen::Index i = 0; i < cfg.n_signals; ++i)
                r1.mean[i] = base0.mean[i] + base_shift[i] * (1.0 + jitter * unit_rng.uniform(-1.0, 1.0));
        }
        unit.regimes = {r0, r1};
        unit.distortion = distortion;

        if (faulted) {
            unit.schedule = {{0, 0}, {params.regime_change, 1}};
            FaultSpec fault;
            fault.time = params.fault_at;
            fault.signals = fault_signals;
            fault.shift_std_units = params.fault_shift_std;
            fault.drift = params.fault_drift;
            unit.fault = fault;
        } else {
            // sources saw both regimes within the year; switch day varies
            Duration sw = 60 * kSecondsPerDay +
                          static_cast<Duration>(unit_rng.below(120)) * kSecondsPerDay;
            unit.schedule = {{0, 0}, {sw, 1}};
        }
        cfg.units.push_back(std::move(unit));
    }
    return cfg;
}

}  // namespace fleetmon
