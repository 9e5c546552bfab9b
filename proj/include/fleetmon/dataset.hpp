#pragma once

#include "fleetmon/numeric.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fleetmon {

// Seconds since Unix epoch, UTC. CSV files carry ISO-8601 timestamps.
using TimePoint = std::int64_t;
using Duration = std::int64_t;

constexpr Duration kSecondsPerDay = 86400;
// Calendar windows are fixed wall-clock spans so splits are deterministic.
constexpr Duration kOneMonth = 30 * kSecondsPerDay;
constexpr Duration kTwoMonths = 61 * kSecondsPerDay;
constexpr Duration kNineMonths = 270 * kSecondsPerDay;
constexpr Duration kTwoWeeks = 14 * kSecondsPerDay;

TimePoint parse_iso8601(const std::string& text);
std::string format_iso8601(TimePoint t);

// One unit's multivariate sensor stream. Rows of `values` line up with
// `timestamps`; `fault_time` is the expert detection instant when known.
struct UnitSeries {
    std::string unit_id;
    std::vector<TimePoint> timestamps;
    Matrix values;  // rows = samples, cols = signals
    std::vector<std::string> signal_names;
    std::optional<TimePoint> fault_time;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
    TimePoint start() const;
    TimePoint end() const;

    // Rows with timestamp in [begin, end).
    UnitSeries slice(TimePoint begin, TimePoint end) const;
};

// Per-signal affine map anchored at the 1st/99th percentiles of the fitting
// window: those anchors map to -1 and +1 exactly.
struct Normalizer {
    Vector p1;
    Vector p99;

    Matrix apply(const Matrix& raw) const;
    Eigen::Index cols() const { return p1.size(); }
};

struct SplitSpec {
    TimePoint train_begin = 0;
    TimePoint train_end = 0;
    // healthy evaluation window is [train_end, blackout_start)
    TimePoint blackout_start = 0;
    std::optional<TimePoint> fault_time;
};

// CSV ingestion. `timestamp,<sig>,...` header, ISO-8601 UTC instants, decimal
// floats; a missing value is an empty field or the literal NaN.
UnitSeries load_unit(const std::string& path, std::optional<TimePoint> fault_time = std::nullopt,
                     const std::string& unit_id = "");
void write_unit_csv(const UnitSeries& series, const std::string& path);

// Drops every row holding a missing (non-finite) entry or an exact zero.
UnitSeries clean(const UnitSeries& series);

Normalizer fit_normalizer(const UnitSeries& series, TimePoint window_begin, TimePoint window_end);

UnitSeries normalize(const UnitSeries& series, const Normalizer& norm);

// Training-only variant: rows with any normalized value above 3 are removed.
// Evaluation data is normalized but never filtered.
UnitSeries normalize_and_filter_train(const UnitSeries& series, const Normalizer& norm);

// Train = first `train_span` of the series, healthy-eval runs from train_end
// to one month before the fault, the last pre-fault month is blacked out.
SplitSpec split(const UnitSeries& series, Duration train_span = kTwoMonths);

struct ManifestEntry {
    std::string unit_id;
    std::string csv_path;  // resolved against the manifest directory
    std::optional<TimePoint> fault_time;
};

struct FleetManifest {
    std::vector<ManifestEntry> units;
};

FleetManifest load_manifest(const std::string& path);
void write_manifest(const FleetManifest& manifest, const std::string& path);

}  // namespace fleetmon
