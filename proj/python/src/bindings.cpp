#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fleetmon/harness.hpp"
#include "fleetmon/similarity.hpp"
#include "fleetmon/strategies.hpp"
#include "fleetmon/synthfleet.hpp"

namespace py = pybind11;
using namespace fleetmon;

PYBIND11_MODULE(_core, m) {
    m.doc() = "fleet fault detection: HELM ensembles, MMD similarity, UFAN alignment";

    // --- dataset ---
    m.def("parse_iso8601", &parse_iso8601, py::arg("text"));
    m.def("format_iso8601", &format_iso8601, py::arg("t"));

    py::class_<UnitSeries>(m, "UnitSeries")
        .def(py::init<>())
        .def_readwrite("unit_id", &UnitSeries::unit_id)
        .def_readwrite("timestamps", &UnitSeries::timestamps)
        .def_readwrite("values", &UnitSeries::values)
        .def_readwrite("signal_names", &UnitSeries::signal_names)
        .def_readwrite("fault_time", &UnitSeries::fault_time)
        .def("slice", &UnitSeries::slice, py::arg("begin"), py::arg("end"))
        .def("__len__", [](const UnitSeries& s) { return s.rows(); });

    py::class_<Normalizer>(m, "Normalizer")
        .def_readonly("p1", &Normalizer::p1)
        .def_readonly("p99", &Normalizer::p99)
        .def("apply", &Normalizer::apply, py::arg("raw"));

    py::class_<SplitSpec>(m, "SplitSpec")
        .def_readonly("train_begin", &SplitSpec::train_begin)
        .def_readonly("train_end", &SplitSpec::train_end)
        .def_readonly("blackout_start", &SplitSpec::blackout_start)
        .def_readonly("fault_time", &SplitSpec::fault_time);

    m.def("load_unit", &load_unit, py::arg("path"), py::arg("fault_time") = std::nullopt,
          py::arg("unit_id") = "");
    m.def("write_unit_csv", &write_unit_csv, py::arg("series"), py::arg("path"));
    m.def("clean", &clean, py::arg("series"));
    m.def("fit_normalizer", &fit_normalizer, py::arg("series"), py::arg("window_begin"),
          py::arg("window_end"));
    m.def("normalize", &normalize, py::arg("series"), py::arg("norm"));
    m.def("normalize_and_filter_train", &normalize_and_filter_train, py::arg("series"), py::arg("norm"));
    m.def("split", &split, py::arg("series"), py::arg("train_span") = kTwoMonths);

    // --- elm core ---
    py::class_<RandomLayer>(m, "RandomLayer")
        .def_readonly("weights", &RandomLayer::weights)
        .def_readonly("biases", &RandomLayer::biases)
        .def_readonly("seed", &RandomLayer::seed);
    m.def("make_random_layer", &make_random_layer, py::arg("seed"), py::arg("in_dim"),
          py::arg("n_neurons"));
    m.def("hidden", &hidden, py::arg("layer"), py::arg("X"));
    m.def(
        "solve_ridge",
        [](const Matrix& H, const Matrix& T, double C) { return solve_ridge(H, T, C).beta; },
        py::arg("H"), py::arg("T"), py::arg("C"));
    m.def(
        "solve_lasso_fista",
        [](const Matrix& H, const Matrix& X, double lam, int max_iters, double tol) {
            LassoResult r = solve_lasso_fista(H, X, lam, max_iters, tol);
            return py::make_tuple(r.weights.beta, r.converged, r.iterations, r.objective);
        },
        py::arg("H"), py::arg("X_target"), py::arg("lambda_"), py::arg("max_iters") = 5000,
        py::arg("tol") = 1e-8);

    // --- helm ---
    py::class_<HelmHyper>(m, "HelmHyper")
        .def(py::init<>())
        .def_readwrite("n_features", &HelmHyper::n_features)
        .def_readwrite("lasso_lambda", &HelmHyper::lasso_lambda)
        .def_readwrite("occ_neurons", &HelmHyper::occ_neurons)
        .def_readwrite("ridge_c", &HelmHyper::ridge_c)
        .def_readwrite("percentile_p", &HelmHyper::percentile_p)
        .def_readwrite("gamma", &HelmHyper::gamma)
        .def_readwrite("n_models", &HelmHyper::n_models)
        .def_readwrite("fista_max_iters", &HelmHyper::fista_max_iters)
        .def_readwrite("fista_tol", &HelmHyper::fista_tol);

    py::class_<HelmEnsemble>(m, "HelmEnsemble")
        .def_readonly("base_seed", &HelmEnsemble::base_seed)
        .def_readonly("hyper", &HelmEnsemble::hyper)
        .def("__len__", [](const HelmEnsemble& e) { return e.models.size(); })
        .def("thresholds", [](const HelmEnsemble& e) {
            std::vector<double> out;
            for (const auto& model : e.models) out.push_back(model.occ.threshold);
            return out;
        });

    m.def("train_helm_ensemble", &train_helm_ensemble, py::arg("X_train"), py::arg("hyper"),
          py::arg("base_seed"));
    m.def("ensemble_score", &ensemble_score, py::arg("ensemble"), py::arg("X"));
    m.def("save_helm_ensemble", &save_helm_ensemble, py::arg("ensemble"), py::arg("path"));
    m.def("load_helm_ensemble", &load_helm_ensemble, py::arg("path"));

    // --- similarity ---
    py::class_<KernelBank>(m, "KernelBank")
        .def(py::init<>())
        .def_readwrite("widths", &KernelBank::widths);
    py::class_<SimilarityRanking>(m, "SimilarityRanking")
        .def_readonly("target_id", &SimilarityRanking::target_id)
        .def_readonly("method", &SimilarityRanking::method)
        .def_readonly("candidates", &SimilarityRanking::candidates);

    m.def("helm_distance", &helm_distance, py::arg("target_ensemble"), py::arg("candidate"));
    m.def("mmd_squared", &mmd_squared, py::arg("X"), py::arg("Y"), py::arg("bank") = KernelBank{});
    m.def("mmd_chunked", &mmd_chunked, py::arg("X"), py::arg("Y"), py::arg("bank") = KernelBank{},
          py::arg("chunk") = kOneMonth, py::arg("row_cap") = 10000);
    m.def(
        "rank_sources",
        [](const UnitSeries& target, const std::vector<UnitSeries>& fleet, const std::string& method,
           const HelmHyper& hyper, std::uint64_t seed) {
            return rank_sources(target, fleet,
                                method == "helm" ? SimilarityMethod::Helm : SimilarityMethod::Mmd, hyper,
                                seed);
        },
        py::arg("target"), py::arg("fleet"), py::arg("method"), py::arg("hyper") = HelmHyper{},
        py::arg("seed") = 0);

    // --- ufan ---
    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("alpha", &TrainConfig::alpha)
        .def_readwrite("seed", &TrainConfig::seed);

    py::class_<EpochStats>(m, "EpochStats")
        .def_readonly("l_f", &EpochStats::l_f)
        .def_readonly("l_d", &EpochStats::l_d)
        .def_readonly("adversarial", &EpochStats::adversarial)
        .def_readonly("eta", &EpochStats::eta);

    py::class_<UfanModel>(m, "UfanModel")
        .def_readonly("alpha", &UfanModel::alpha)
        .def_readonly("eta", &UfanModel::eta)
        .def_readonly("history", &UfanModel::history);

    m.def("train_ufan", &train_ufan, py::arg("source"), py::arg("target_train"), py::arg("cfg"));
    m.def("encode", &encode, py::arg("model"), py::arg("X"));
    m.def("discriminate", &discriminate, py::arg("model"), py::arg("F"));
    m.def("adversarial_score", &adversarial_score, py::arg("model"));
    m.def("optimal_eta", &optimal_eta, py::arg("dX"), py::arg("dF"), py::arg("weights"));
    m.def(
        "homothety_loss",
        [](const Matrix& xs, const Matrix& fs, const Matrix& xt, const Matrix& ft) {
            HomothetyResult r = homothety_loss(xs, fs, xt, ft);
            return py::make_tuple(r.l_f, r.eta);
        },
        py::arg("X_src"), py::arg("F_src"), py::arg("X_tgt"), py::arg("F_tgt"));
    m.def("bce_loss", &bce_loss, py::arg("probs"), py::arg("labels"));
    m.def("save_ufan", &save_ufan, py::arg("model"), py::arg("path"));
    m.def("load_ufan", &load_ufan, py::arg("path"));

    // --- strategies ---
    py::class_<DetectionReport>(m, "DetectionReport")
        .def_readonly("unit_id", &DetectionReport::unit_id)
        .def_readonly("strategy", &DetectionReport::strategy)
        .def_readonly("source_unit_id", &DetectionReport::source_unit_id)
        .def_readonly("fp_percent", &DetectionReport::fp_percent)
        .def_readonly("detected", &DetectionReport::detected)
        .def_readonly("valid", &DetectionReport::valid)
        .def_readonly("selection_score", &DetectionReport::selection_score)
        .def_readonly("wall_time_s", &DetectionReport::wall_time_s)
        .def_readonly("detail", &DetectionReport::detail)
        .def_readonly("error", &DetectionReport::error);

    py::class_<IncrementalConfig>(m, "IncrementalConfig")
        .def(py::init<>())
        .def_readwrite("step", &IncrementalConfig::step)
        .def_readwrite("ratio", &IncrementalConfig::ratio)
        .def_readwrite("sliding", &IncrementalConfig::sliding);

    m.def(
        "run_baseline",
        [](const UnitSeries& unit, int train_months, const HelmHyper& hyper, std::uint64_t seed) {
            Duration span = train_months == 9 ? kNineMonths : kTwoMonths;
            return run_baseline(unit, span, hyper, seed);
        },
        py::arg("unit"), py::arg("train_months"), py::arg("hyper") = HelmHyper{}, py::arg("seed") = 0);
    m.def(
        "run_incremental",
        [](const UnitSeries& unit, const IncrementalConfig& cfg, const HelmHyper& hyper,
           std::uint64_t seed) { return run_incremental(unit, cfg, hyper, seed).report; },
        py::arg("unit"), py::arg("cfg"), py::arg("hyper") = HelmHyper{}, py::arg("seed") = 0);
    m.def(
        "run_pairwise",
        [](const UnitSeries& target, const std::vector<UnitSeries>& fleet, const std::string& method,
           const HelmHyper& hyper, const TrainConfig& ufan_cfg, std::uint64_t seed) {
            PairMethod pm = method == "helm"  ? PairMethod::Helm
                            : method == "mmd" ? PairMethod::Mmd
                                              : PairMethod::Ufan;
            return run_pairwise(target, fleet, pm, hyper, ufan_cfg, seed);
        },
        py::arg("target"), py::arg("fleet"), py::arg("method"), py::arg("hyper") = HelmHyper{},
        py::arg("ufan_cfg") = TrainConfig{}, py::arg("seed") = 0);
    m.def(
        "run_all_pairs",
        [](const UnitSeries& target, const std::vector<UnitSeries>& fleet, const std::string& method,
           const HelmHyper& hyper, const TrainConfig& ufan_cfg, std::uint64_t seed) {
            AllPairsResult r = run_all_pairs(target, fleet,
                                             method == "helm" ? PairMethod::Helm : PairMethod::Ufan, hyper,
                                             ufan_cfg, seed);
            return py::make_tuple(r.reports, r.valid_count, r.mean_fp_over_valid);
        },
        py::arg("target"), py::arg("fleet"), py::arg("method"), py::arg("hyper") = HelmHyper{},
        py::arg("ufan_cfg") = TrainConfig{}, py::arg("seed") = 0);

    // --- synthetic fleet ---
    py::class_<ScenarioParams>(m, "ScenarioParams")
        .def(py::init<>())
        .def_readwrite("n_units", &ScenarioParams::n_units)
        .def_readwrite("n_faulted", &ScenarioParams::n_faulted)
        .def_readwrite("n_signals", &ScenarioParams::n_signals)
        .def_readwrite("period", &ScenarioParams::period)
        .def_readwrite("duration", &ScenarioParams::duration)
        .def_readwrite("regime_change", &ScenarioParams::regime_change)
        .def_readwrite("fault_at", &ScenarioParams::fault_at)
        .def_readwrite("fault_shift_std", &ScenarioParams::fault_shift_std)
        .def_readwrite("noise_scale", &ScenarioParams::noise_scale)
        .def_readwrite("regime_jitter", &ScenarioParams::regime_jitter)
        .def_readwrite("distortion_max", &ScenarioParams::distortion_max)
        .def_readwrite("n_similar_sources", &ScenarioParams::n_similar_sources);

    py::class_<FleetConfig>(m, "FleetConfig")
        .def_readonly("n_signals", &FleetConfig::n_signals)
        .def_readonly("period", &FleetConfig::period)
        .def_readonly("duration", &FleetConfig::duration);

    m.def("make_scenario", &make_scenario, py::arg("params"), py::arg("seed"));
    m.def("generate_unit", &generate_unit, py::arg("cfg"), py::arg("unit_index"), py::arg("seed"));
    m.def(
        "generate_fleet",
        [](const FleetConfig& cfg, std::uint64_t seed, const std::string& out_dir) {
            GeneratedFleet fleet = generate_fleet(cfg, seed, out_dir);
            return py::make_tuple(fleet.manifest_path, fleet.ground_truth_path);
        },
        py::arg("cfg"), py::arg("seed"), py::arg("out_dir"));

    // --- constants ---
    m.attr("ONE_MONTH") = kOneMonth;
    m.attr("TWO_MONTHS") = kTwoMonths;
    m.attr("NINE_MONTHS") = kNineMonths;
    m.attr("TWO_WEEKS") = kTwoWeeks;
    m.attr("SECONDS_PER_DAY") = kSecondsPerDay;
}
