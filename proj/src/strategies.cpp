#include "fleetmon/strategies.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>

namespace fleetmon {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Matrix vstack(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw std::invalid_argument("vstack: column mismatch");
    Matrix out(a.rows() + b.rows(), a.cols());
    out.topRows(a.rows()) = a;
    out.bottomRows(b.rows()) = b;
    return out;
}

Matrix filter_rows_above3(const Matrix& M) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        if (!(M.row(i).array() > 3.0).any()) keep.push_back(i);
    Matrix out(static_cast<Eigen::Index>(keep.size()), M.cols());
    Eigen::Index r = 0;
    for (Eigen::Index i : keep) out.row(r++) = M.row(i);
    return out;
}

void append_points(std::vector<ScoredPoint>& points, const UnitSeries& window, const Vector& mags) {
    for (Eigen::Index i = 0; i < mags.size(); ++i)
        points.push_back({window.timestamps[static_cast<std::size_t>(i)], mags[i], mags[i] > 1.0});
}

UnitSeries concat_series(const UnitSeries& a, const UnitSeries& b) {
    if (b.rows() == 0) return a;
    if (a.rows() == 0) return b;
    if (a.end() >= b.start()) throw std::invalid_argument("concat_series: overlapping windows");
    UnitSeries out = a;
    out.timestamps.insert(out.timestamps.end(), b.timestamps.begin(), b.timestamps.end());
    out.values = vstack(a.values, b.values);
    return out;
}

std::string format_r(double r) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "r=%.2f", r);
    return buf;
}

// A fleet candidate normalized in its own space, with training rows filtered.
struct CandidatePrep {
    std::string unit_id;
    UnitSeries cleaned;
    Normalizer own_norm;
    UnitSeries normed_full;
    Matrix train_rows;
};

CandidatePrep prepare_candidate(const UnitSeries& unit) {
    CandidatePrep prep;
    prep.unit_id = unit.unit_id;
    prep.cleaned = clean(unit);
    // anchor every unit on its own early life so the per-unit normalized
    // coordinates agree across the fleet
    prep.own_norm =
        fit_normalizer(prep.cleaned, prep.cleaned.start(), prep.cleaned.start() + kTwoMonths);
    prep.normed_full = normalize(prep.cleaned, prep.own_norm);
    prep.train_rows = filter_rows_above3(prep.normed_full.values);
    return prep;
}

DetectionReport score_and_evaluate(const PreparedUnit& prep, const std::string& unit_id,
                                   const std::string& strategy,
                                   const std::function<Vector(const Matrix&)>& score) {
    DetectionReport report;
    report.unit_id = unit_id;
    report.strategy = strategy;
    if (prep.healthy_eval.rows() > 0) append_points(report.points, prep.healthy_eval, score(prep.healthy_eval.values));
    if (prep.fault_eval.rows() > 0) append_points(report.points, prep.fault_eval, score(prep.fault_eval.values));
    EvalOutcome outcome = evaluate(report.points, prep.split);
    report.fp_percent = outcome.fp_percent;
    report.detected = outcome.detected;
    report.valid = outcome.valid;
    return report;
}

}  // namespace

std::string pair_method_name(PairMethod method) {
    switch (method) {
        case PairMethod::Helm: return "helm";
        case PairMethod::Mmd: return "mmd";
        case PairMethod::Ufan: return "ufan";
    }
    return "?";
}

EvalOutcome evaluate(const std::vector<ScoredPoint>& points, const SplitSpec& split) {
    EvalOutcome outcome;
    Eigen::Index flagged_healthy = 0;
    for (const auto& point : points) {
        if (point.time >= split.train_end && point.time < split.blackout_start) {
            ++outcome.healthy_points;
            if (point.flagged) ++flagged_healthy;
        } else if (split.fault_time && point.time >= *split.fault_time) {
            ++outcome.fault_points;
            if (point.flagged) outcome.detected = true;
        }
        // blackout window and training window contribute nothing
    }
    if (outcome.healthy_points == 0) throw std::runtime_error("evaluate: empty healthy evaluation window");
    outcome.fp_percent =
        100.0 * static_cast<double>(flagged_healthy) / static_cast<double>(outcome.healthy_points);
    outcome.valid = outcome.detected && outcome.fp_percent < 15.0;
    return outcome;
}

PreparedUnit prepare_unit(const UnitSeries& unit, Duration train_span) {
    PreparedUnit prep;
    prep.cleaned = clean(unit);
    prep.split = split(prep.cleaned, train_span);
    prep.norm = fit_normalizer(prep.cleaned, prep.split.train_begin, prep.split.train_end);
    UnitSeries train = prep.cleaned.slice(prep.split.train_begin, prep.split.train_end);
    prep.train_filtered = normalize_and_filter_train(train, prep.norm).values;
    prep.healthy_eval = normalize(prep.cleaned.slice(prep.split.train_end, prep.split.blackout_start), prep.norm);
    if (prep.split.fault_time)
        prep.fault_eval =
            normalize(prep.cleaned.slice(*prep.split.fault_time, prep.cleaned.end() + 1), prep.norm);
    return prep;
}

DetectionReport run_baseline(const UnitSeries& unit, Duration train_span, const HelmHyper& hyper,
                             std::uint64_t seed, HelmEnsemble* model_out) {
    auto t0 = Clock::now();
    PreparedUnit prep = prepare_unit(unit, train_span);
    HelmEnsemble ensemble = train_helm_ensemble(prep.train_filtered, hyper, seed);
    if (model_out) *model_out = ensemble;

    std::string name = train_span == kTwoMonths  ? "H-2m"
                       : train_span == kNineMonths ? "H-9m"
                                                   : "H-" + std::to_string(train_span / kSecondsPerDay) + "d";
    DetectionReport report = score_and_evaluate(
        prep, unit.unit_id, name, [&](const Matrix& rows) { return ensemble_score(ensemble, rows); });
    report.wall_time_s = seconds_since(t0);
    return report;
}

IncrementalResult run_incremental(const UnitSeries& unit, const IncrementalConfig& cfg,
                                  const HelmHyper& hyper, std::uint64_t seed) {
    if (cfg.ratio < 0.0 || cfg.ratio > 1.0) throw std::invalid_argument("run_incremental: ratio outside [0,1]");
    auto t0 = Clock::now();

    UnitSeries cleaned = clean(unit);
    SplitSpec spec = split(cleaned, kTwoMonths);

    UnitSeries train_set = cleaned.slice(spec.train_begin, spec.train_end);
    Normalizer norm = fit_normalizer(train_set, train_set.start(), train_set.end() + 1);
    HelmEnsemble ensemble =
        train_helm_ensemble(normalize_and_filter_train(train_set, norm).values, hyper, seed);

    IncrementalResult result;
    result.report.unit_id = unit.unit_id;
    result.report.strategy = "H-Inc";
    result.report.detail = format_r(cfg.ratio);

    for (TimePoint begin = spec.train_end; begin < spec.blackout_start; begin += cfg.step) {
        TimePoint end = std::min(begin + cfg.step, spec.blackout_start);
        UnitSeries block = cleaned.slice(begin, end);
        IncrementalStep step;
        step.block_begin = begin;
        step.block_rows = block.rows();
        step.train_rows_after = train_set.rows();
        if (block.rows() == 0) {
            result.steps.push_back(step);
            continue;
        }

        // flags are recorded with the current model, before any retraining
        Vector mags = ensemble_score(ensemble, norm.apply(block.values));
        append_points(result.report.points, block, mags);
        Eigen::Index flagged = (mags.array() > 1.0).count();
        step.flagged_fraction = static_cast<double>(flagged) / static_cast<double>(block.rows());

        if (step.flagged_fraction < cfg.ratio) {
            step.absorbed = true;
            train_set = concat_series(train_set, block);
            if (cfg.sliding) train_set = train_set.slice(train_set.start() + cfg.step, train_set.end() + 1);
            norm = fit_normalizer(train_set, train_set.start(), train_set.end() + 1);
            ensemble = train_helm_ensemble(normalize_and_filter_train(train_set, norm).values, hyper, seed);
        }
        step.train_rows_after = train_set.rows();
        result.steps.push_back(step);
    }

    if (spec.fault_time) {
        UnitSeries fault_block = cleaned.slice(*spec.fault_time, cleaned.end() + 1);
        if (fault_block.rows() > 0) {
            Vector mags = ensemble_score(ensemble, norm.apply(fault_block.values));
            append_points(result.report.points, fault_block, mags);
        }
    }

    EvalOutcome outcome = evaluate(result.report.points, spec);
    result.report.fp_percent = outcome.fp_percent;
    result.report.detected = outcome.detected;
    result.report.valid = outcome.valid;
    result.report.wall_time_s = seconds_since(t0);
    return result;
}

DetectionReport run_incremental_best_r(const UnitSeries& unit, const std::vector<double>& r_grid,
                                       const HelmHyper& hyper, std::uint64_t seed) {
    if (r_grid.empty()) throw std::invalid_argument("run_incremental_best_r: empty grid");
    auto t0 = Clock::now();
    std::optional<DetectionReport> best;
    auto better = [](const DetectionReport& a, const DetectionReport& b) {
        if (a.valid != b.valid) return a.valid;
        if (a.detected != b.detected) return a.detected;
        return a.fp_percent < b.fp_percent;
    };
    for (double r : r_grid) {
        IncrementalConfig cfg;
        cfg.ratio = r;
        DetectionReport report = run_incremental(unit, cfg, hyper, seed).report;
        if (!best || better(report, *best)) best = std::move(report);
    }
    best->wall_time_s = seconds_since(t0);
    return *best;
}

DetectionReport run_pairwise(const UnitSeries& target, const std::vector<UnitSeries>& fleet,
                             PairMethod method, const HelmHyper& hyper, const TrainConfig& ufan_cfg,
                             std::uint64_t seed, SimilarityRanking* ranking_out,
                             HelmEnsemble* ensemble_out, UfanModel* ufan_out) {
    if (fleet.empty()) throw std::invalid_argument("run_pairwise: empty fleet");
    auto t0 = Clock::now();

    PreparedUnit prep = prepare_unit(target, kTwoMonths);
    UnitSeries target_train = prep.cleaned.slice(prep.split.train_begin, prep.split.train_end);

    std::vector<CandidatePrep> candidates;
    candidates.reserve(fleet.size());
    for (const auto& unit : fleet) candidates.push_back(prepare_candidate(unit));

    DetectionReport report;
    if (method == PairMethod::Ufan) {
        // every candidate gets its own alignment; the lowest final adversarial
        // loss wins
        SimilarityRanking ranking;
        ranking.target_id = target.unit_id;
        ranking.method = "ufan";
        std::optional<std::size_t> best;
        double best_score = 0.0;
        std::vector<UfanModel> models(candidates.size());
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            TrainConfig cfg = ufan_cfg;
            cfg.seed = derive_seed(seed, hash_string("ufan:" + candidates[c].unit_id));
            models[c] = train_ufan(candidates[c].train_rows, prep.train_filtered, cfg);
            double score = adversarial_score(models[c]);
            ranking.candidates.emplace_back(candidates[c].unit_id, score);
            if (!best || score < best_score ||
                (score == best_score && candidates[c].unit_id < candidates[*best].unit_id)) {
                best = c;
                best_score = score;
            }
        }
        std::sort(ranking.candidates.begin(), ranking.candidates.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second < b.second;
            return a.first < b.first;
        });
        if (ranking_out) *ranking_out = ranking;

        const CandidatePrep& source = candidates[*best];
        const UfanModel& model = models[*best];
        Matrix features = encode(model, vstack(source.train_rows, prep.train_filtered));
        OccEnsemble occ = train_occ_ensemble(features, hyper,
                                             derive_seed(seed, hash_string("ufan-occ:" + source.unit_id)));
        report = score_and_evaluate(prep, target.unit_id, "UFA", [&](const Matrix& rows) {
            return occ_ensemble_score(occ, encode(model, rows));
        });
        report.source_unit_id = source.unit_id;
        report.selection_score = best_score;
        if (ufan_out) *ufan_out = model;
    } else {
        HelmEnsemble rank_ensemble;
        UnitSeries target_view;
        std::vector<RankCandidate> rank_candidates_in;
        if (method == PairMethod::Helm) {
            rank_ensemble =
                train_helm_ensemble(prep.train_filtered, hyper, derive_seed(seed, hash_string("rank")));
            for (auto& cand : candidates) {
                RankCandidate rc;
                rc.unit_id = cand.unit_id;
                rc.helm_view = prep.norm.apply(cand.cleaned.values);
                rank_candidates_in.push_back(std::move(rc));
            }
        } else {
            target_view = normalize(target_train, prep.norm);
            for (auto& cand : candidates) {
                RankCandidate rc;
                rc.unit_id = cand.unit_id;
                rc.mmd_view = &cand.normed_full;
                rank_candidates_in.push_back(std::move(rc));
            }
        }
        SimilarityRanking ranking = rank_candidates(
            target.unit_id, method == PairMethod::Helm ? SimilarityMethod::Helm : SimilarityMethod::Mmd,
            &rank_ensemble, &target_view, rank_candidates_in, KernelBank{});
        if (ranking_out) *ranking_out = ranking;

        const auto& best_id = ranking.candidates.front().first;
        const auto source = std::find_if(candidates.begin(), candidates.end(),
                                         [&](const CandidatePrep& c) { return c.unit_id == best_id; });
        Matrix train = vstack(prep.train_filtered, source->train_rows);
        HelmEnsemble ensemble =
            train_helm_ensemble(train, hyper, derive_seed(seed, hash_string("pair:" + best_id)));
        report = score_and_evaluate(
            prep, target.unit_id, method == PairMethod::Helm ? "H-H" : "H-M",
            [&](const Matrix& rows) { return ensemble_score(ensemble, rows); });
        report.source_unit_id = best_id;
        report.selection_score = ranking.candidates.front().second;
        if (ensemble_out) *ensemble_out = std::move(ensemble);
    }
    report.wall_time_s = seconds_since(t0);
    return report;
}

AllPairsResult run_all_pairs(const UnitSeries& target, const std::vector<UnitSeries>& fleet,
                             PairMethod method, const HelmHyper& hyper, const TrainConfig& ufan_cfg,
                             std::uint64_t seed) {
    if (fleet.empty()) throw std::invalid_argument("run_all_pairs: empty fleet");
    if (method == PairMethod::Mmd)
        throw std::invalid_argument("run_all_pairs: supported methods are helm and ufan");

    PreparedUnit prep = prepare_unit(target, kTwoMonths);

    AllPairsResult result;
    for (const auto& unit : fleet) {
        auto t0 = Clock::now();
        DetectionReport report;
        report.unit_id = target.unit_id;
        report.strategy = method == PairMethod::Helm ? "H-H-pair" : "UFA-pair";
        report.source_unit_id = unit.unit_id;
        try {
            CandidatePrep cand = prepare_candidate(unit);
            if (method == PairMethod::Helm) {
                Matrix train = vstack(prep.train_filtered, cand.train_rows);
                HelmEnsemble ensemble = train_helm_ensemble(
                    train, hyper, derive_seed(seed, hash_string("pair:" + cand.unit_id)));
                DetectionReport scored =
                    score_and_evaluate(prep, target.unit_id, report.strategy,
                                       [&](const Matrix& rows) { return ensemble_score(ensemble, rows); });
                scored.source_unit_id = cand.unit_id;
                report = std::move(scored);
            } else {
                TrainConfig cfg = ufan_cfg;
                cfg.seed = derive_seed(seed, hash_string("ufan:" + cand.unit_id));
                UfanModel model = train_ufan(cand.train_rows, prep.train_filtered, cfg);
                Matrix features = encode(model, vstack(cand.train_rows, prep.train_filtered));
                OccEnsemble occ = train_occ_ensemble(
                    features, hyper, derive_seed(seed, hash_string("ufan-occ:" + cand.unit_id)));
                DetectionReport scored =
                    score_and_evaluate(prep, target.unit_id, report.strategy, [&](const Matrix& rows) {
                        return occ_ensemble_score(occ, encode(model, rows));
                    });
                scored.source_unit_id = cand.unit_id;
                scored.selection_score = adversarial_score(model);
                report = std::move(scored);
            }
        } catch (const std::exception& e) {
            report.error = e.what();
        }
        report.wall_time_s = seconds_since(t0);
        result.reports.push_back(std::move(report));
    }
    AllPairsResult summary = summarize_all_pairs(std::move(result.reports));
    return summary;
}

AllPairsResult summarize_all_pairs(std::vector<DetectionReport> reports) {
    AllPairsResult result;
    result.reports = std::move(reports);
    double fp_sum = 0.0;
    for (const auto& report : result.reports) {
        if (report.error.empty() && report.valid) {
            ++result.valid_count;
            fp_sum += report.fp_percent;
        }
    }
    result.mean_fp_over_valid = result.valid_count > 0 ? fp_sum / result.valid_count : 0.0;
    return result;
}

}  // namespace fleetmon
