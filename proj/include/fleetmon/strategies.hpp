#pragma once

#include "fleetmon/dataset.hpp"
#include "fleetmon/helm.hpp"
#include "fleetmon/similarity.hpp"
#include "fleetmon/ufan.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fleetmon {

struct ScoredPoint {
    TimePoint time = 0;
    double magnification = 0.0;
    bool flagged = false;
};

struct DetectionReport {
    std::string unit_id;
    std::string strategy;
    std::optional<std::string> source_unit_id;
    std::vector<ScoredPoint> points;  // healthy-eval and fault-eval windows
    double fp_percent = 0.0;
    bool detected = false;
    bool valid = false;
    double selection_score = 0.0;  // distance / adversarial loss of the source, when pairwise
    double wall_time_s = 0.0;
    std::string detail;
    std::string error;  // non-empty when the run failed
};

struct IncrementalConfig {
    Duration step = kTwoWeeks;
    double ratio = 0.15;
    bool sliding = false;
};

struct EvalOutcome {
    double fp_percent = 0.0;
    bool detected = false;
    bool valid = false;
    Eigen::Index healthy_points = 0;
    Eigen::Index fault_points = 0;
};

// False positives are counted over [train_end, blackout_start) only; the
// blackout month is ignored and detection means any flag at or after the
// fault instant. Valid requires detection and fp strictly below 15%.
EvalOutcome evaluate(const std::vector<ScoredPoint>& points, const SplitSpec& split);

// Cleaned unit with its split, training-window normalizer, filtered training
// rows and unfiltered normalized evaluation rows.
struct PreparedUnit {
    UnitSeries cleaned;
    SplitSpec split;
    Normalizer norm;
    Matrix train_filtered;
    UnitSeries healthy_eval;  // normalized, [train_end, blackout_start)
    UnitSeries fault_eval;    // normalized, [fault_time, end]
};

PreparedUnit prepare_unit(const UnitSeries& unit, Duration train_span);

DetectionReport run_baseline(const UnitSeries& unit, Duration train_span, const HelmHyper& hyper,
                             std::uint64_t seed, HelmEnsemble* model_out = nullptr);

struct IncrementalStep {
    TimePoint block_begin = 0;
    Eigen::Index block_rows = 0;
    double flagged_fraction = 0.0;
    bool absorbed = false;
    Eigen::Index train_rows_after = 0;
};

struct IncrementalResult {
    DetectionReport report;
    std::vector<IncrementalStep> steps;
};

// Walks the healthy span in two-week blocks, scoring each against the current
// ensemble (flags recorded before any retraining); blocks whose flagged
// fraction stays below the ratio are absorbed into the training set and the
// whole pipeline (normalizer included) is retrained.
IncrementalResult run_incremental(const UnitSeries& unit, const IncrementalConfig& cfg,
                                  const HelmHyper& hyper, std::uint64_t seed);

// Grid search over r, keeping the best report (valid first, then detected,
// then lowest fp).
DetectionReport run_incremental_best_r(const UnitSeries& unit, const std::vector<double>& r_grid,
                                       const HelmHyper& hyper, std::uint64_t seed);

enum class PairMethod { Helm, Mmd, Ufan };
std::string pair_method_name(PairMethod method);

// Selects the best source by the method's distance (or adversarial loss for
// UFAN), trains on the combined data and evaluates on the target.
DetectionReport run_pairwise(const UnitSeries& target, const std::vector<UnitSeries>& fleet,
                             PairMethod method, const HelmHyper& hyper, const TrainConfig& ufan_cfg,
                             std::uint64_t seed, SimilarityRanking* ranking_out = nullptr,
                             HelmEnsemble* ensemble_out = nullptr, UfanModel* ufan_out = nullptr);

struct AllPairsResult {
    std::vector<DetectionReport> reports;  // one per candidate source
    int valid_count = 0;
    double mean_fp_over_valid = 0.0;
};

AllPairsResult run_all_pairs(const UnitSeries& target, const std::vector<UnitSeries>& fleet,
                             PairMethod method, const HelmHyper& hyper, const TrainConfig& ufan_cfg,
                             std::uint64_t seed);

// Recount of the summary columns from the per-pair reports.
AllPairsResult summarize_all_pairs(std::vector<DetectionReport> reports);

}  // namespace fleetmon
