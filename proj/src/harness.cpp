#include "fleetmon/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace fleetmon {

namespace {

namespace fs = std::filesystem;

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(s);
    while (std::getline(ss, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

class KeyValues {
public:
    explicit KeyValues(std::map<std::string, std::string> m) : m_(std::move(m)) {}

    std::string str(const std::string& key, const std::string& fallback) const {
        auto it = m_.find(key);
        return it == m_.end() ? fallback : it->second;
    }
    double num(const std::string& key, double fallback) const {
        auto it = m_.find(key);
        return it == m_.end() ? fallback : std::stod(it->second);
    }
    std::uint64_t u64(const std::string& key, std::uint64_t fallback) const {
        auto it = m_.find(key);
        return it == m_.end() ? fallback : std::stoull(it->second);
    }
    int integer(const std::string& key, int fallback) const {
        auto it = m_.find(key);
        return it == m_.end() ? fallback : std::stoi(it->second);
    }
    bool flag(const std::string& key, bool fallback) const {
        auto it = m_.find(key);
        if (it == m_.end()) return fallback;
        return it->second == "true" || it->second == "1" || it->second == "yes";
    }
    bool has(const std::string& key) const { return m_.count(key) > 0; }
    const std::map<std::string, std::string>& raw() const { return m_; }

private:
    std::map<std::string, std::string> m_;
};

void run_parallel(std::vector<std::function<void()>>& tasks, int workers) {
    if (workers <= 1 || tasks.size() <= 1) {
        for (auto& task : tasks) task();
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) break;
            tasks[i]();
        }
    };
    std::vector<std::thread> pool;
    const int count = std::min<int>(workers, static_cast<int>(tasks.size()));
    for (int w = 0; w < count; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

std::string csv_safe(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

std::string format_fp(double fp) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", fp);
    return buf;
}

struct SummaryColumn {
    std::string name;
    std::map<std::string, std::string> cell_by_unit;  // formatted fp or empty
    int valid_count = 0;
    double fp_sum_valid = 0.0;
};

// Table layout mirrors the per-unit / per-strategy results table: one row per
// unit, strategies as columns, all-pairs best/count/mean columns when pair
// reports are present, then validity counts and mean fp over valid models.
void build_summary(const std::vector<DetectionReport>& reports, const std::vector<std::string>& strategies,
                   std::ostream& out) {
    std::set<std::string> unit_set;
    std::vector<DetectionReport> singles, helm_pairs, ufan_pairs;
    for (const auto& r : reports) {
        unit_set.insert(r.unit_id);
        if (r.strategy == "H-H-pair")
            helm_pairs.push_back(r);
        else if (r.strategy == "UFA-pair")
            ufan_pairs.push_back(r);
        else
            singles.push_back(r);
    }
    std::vector<std::string> units(unit_set.begin(), unit_set.end());

    std::vector<SummaryColumn> columns;
    for (const auto& name : strategies) {
        SummaryColumn col;
        col.name = name;
        for (const auto& r : singles) {
            if (r.strategy != name || !r.error.empty()) continue;
            // undetected faults leave the cell blank
            col.cell_by_unit[r.unit_id] = r.detected ? format_fp(r.fp_percent) : "";
            if (r.valid) {
                ++col.valid_count;
                col.fp_sum_valid += r.fp_percent;
            }
        }
        columns.push_back(std::move(col));
    }

    const bool with_pairs = !helm_pairs.empty() || !ufan_pairs.empty();
    auto pair_columns = [&](const std::vector<DetectionReport>& pairs, const std::string& tag) {
        SummaryColumn best{tag + "_best", {}, 0, 0.0};
        SummaryColumn count{tag + "_valid_pairs", {}, 0, 0.0};
        SummaryColumn mean{tag + "_mean_fp", {}, 0, 0.0};
        for (const auto& unit : units) {
            double best_fp = 0.0;
            bool any_detected = false;
            int valid = 0;
            double fp_sum = 0.0;
            bool any = false;
            for (const auto& r : pairs) {
                if (r.unit_id != unit || !r.error.empty()) continue;
                any = true;
                if (r.detected && (!any_detected || r.fp_percent < best_fp)) {
                    any_detected = true;
                    best_fp = r.fp_percent;
                }
                if (r.valid) {
                    ++valid;
                    fp_sum += r.fp_percent;
                }
            }
            if (!any) continue;
            best.cell_by_unit[unit] = any_detected ? format_fp(best_fp) : "";
            count.cell_by_unit[unit] = std::to_string(valid);
            mean.cell_by_unit[unit] = valid > 0 ? format_fp(fp_sum / valid) : "";
        }
        columns.push_back(std::move(best));
        columns.push_back(std::move(count));
        columns.push_back(std::move(mean));
    };
    if (with_pairs) {
        pair_columns(helm_pairs, "HELM");
        pair_columns(ufan_pairs, "UFA");
    }

    out << "unit_id";
    for (const auto& col : columns) out << ',' << col.name;
    out << '\n';
    for (const auto& unit : units) {
        out << unit;
        for (const auto& col : columns) {
            auto it = col.cell_by_unit.find(unit);
            out << ',' << (it == col.cell_by_unit.end() ? "" : it->second);
        }
        out << '\n';
    }
    out << "#valid";
    for (std::size_t c = 0; c < columns.size(); ++c)
        out << ',' << (c < strategies.size() ? std::to_string(columns[c].valid_count) : "");
    out << '\n';
    out << "mean_fp_valid";
    for (std::size_t c = 0; c < columns.size(); ++c)
        out << ','
            << (c < strategies.size() && columns[c].valid_count > 0
                    ? format_fp(columns[c].fp_sum_valid / columns[c].valid_count)
                    : "");
    out << '\n';
}

std::vector<DetectionReport> read_reports_if_present(const std::string& path) {
    if (!fs::exists(path)) return {};
    return read_reports_csv(path);
}

}  // namespace

std::map<std::string, std::string> parse_key_value_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path + "'");
    std::map<std::string, std::string> out;
    std::string line, section;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error("bad config line: '" + line + "'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        out[section.empty() ? key : section + "." + key] = value;
    }
    return out;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    KeyValues kv(parse_key_value_file(path));
    const fs::path base = fs::absolute(fs::path(path)).parent_path();
    auto resolve = [&](const std::string& p) {
        if (p.empty()) return p;
        fs::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };

    ExperimentConfig cfg;
    cfg.output_dir = resolve(kv.str("output_dir", "out"));
    cfg.fleet_dir = resolve(kv.str("fleet_dir", ""));
    if (cfg.fleet_dir.empty()) cfg.fleet_dir = (fs::path(cfg.output_dir) / "fleet").string();
    cfg.manifest_path = resolve(kv.str("manifest", ""));
    if (cfg.manifest_path.empty()) cfg.manifest_path = (fs::path(cfg.fleet_dir) / "manifest.json").string();
    cfg.seed = kv.u64("seed", 42);
    cfg.parallelism = kv.integer("parallelism", 1);
    if (kv.has("strategies")) cfg.strategies = split_list(kv.str("strategies", ""));
    cfg.all_pairs = kv.flag("all_pairs", false);

    cfg.hyper.n_features = kv.integer("hyper.n_features", 10);
    cfg.hyper.lasso_lambda = kv.num("hyper.lasso_lambda", 1e-3);
    cfg.hyper.occ_neurons = kv.integer("hyper.occ_neurons", 200);
    cfg.hyper.ridge_c = kv.num("hyper.ridge_c", 1e-5);
    cfg.hyper.percentile_p = kv.num("hyper.percentile_p", 99.5);
    cfg.hyper.gamma = kv.num("hyper.gamma", 1.2);
    cfg.hyper.n_models = kv.integer("hyper.n_models", 8);
    cfg.hyper.fista_max_iters = kv.integer("hyper.fista_max_iters", 5000);
    cfg.hyper.fista_tol = kv.num("hyper.fista_tol", 1e-8);

    cfg.ufan.batch_size = kv.integer("ufan.batch_size", 150);
    cfg.ufan.epochs = kv.integer("ufan.epochs", 100);
    cfg.ufan.learning_rate = kv.num("ufan.learning_rate", 1e-4);
    cfg.ufan.alpha = kv.num("ufan.alpha", 1.0);
    cfg.ufan.reading = kv.str("ufan.homothety_reading", "squared") == "absolute"
                           ? HomothetyReading::Absolute
                           : HomothetyReading::Squared;

    if (kv.has("incremental.r_grid")) {
        cfg.r_grid.clear();
        for (const auto& r : split_list(kv.str("incremental.r_grid", ""))) cfg.r_grid.push_back(std::stod(r));
    }

    cfg.fleet.n_units = kv.integer("fleet.n_units", 10);
    cfg.fleet.n_faulted = kv.integer("fleet.n_faulted", 2);
    cfg.fleet.n_signals = kv.integer("fleet.n_signals", 24);
    cfg.fleet.n_factors = kv.integer("fleet.n_factors", 3);
    cfg.fleet.period = static_cast<Duration>(kv.num("fleet.period_minutes", 60) * 60);
    cfg.fleet.duration = static_cast<Duration>(kv.num("fleet.duration_days", 360)) * kSecondsPerDay;
    cfg.fleet.regime_change = static_cast<Duration>(kv.num("fleet.regime_change_day", 90)) * kSecondsPerDay;
    cfg.fleet.fault_at = static_cast<Duration>(kv.num("fleet.fault_day", 315)) * kSecondsPerDay;
    cfg.fleet.fault_shift_std = kv.num("fleet.fault_shift_std", 4.0);
    cfg.fleet.fault_signal_count = kv.integer("fleet.fault_signal_count", 3);
    cfg.fleet.fault_drift = static_cast<Duration>(kv.num("fleet.fault_drift_days", 2)) * kSecondsPerDay;
    cfg.fleet.noise_scale = kv.num("fleet.noise_scale", 0.05);
    cfg.fleet.regime_jitter = kv.num("fleet.regime_jitter", 0.35);
    cfg.fleet.distortion_max = kv.num("fleet.distortion_max", 0.55);
    cfg.fleet.n_similar_sources = kv.integer("fleet.n_similar_sources", 2);
    return cfg;
}

void write_reports_csv(const std::vector<DetectionReport>& reports, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "unit_id,strategy,source_unit_id,fp_percent,detected,valid,selection_score,wall_time_s,detail,error\n";
    char buf[96];
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof(buf), "%.6f,%d,%d,%.9g,%.3f", r.fp_percent, r.detected ? 1 : 0,
                      r.valid ? 1 : 0, r.selection_score, r.wall_time_s);
        out << r.unit_id << ',' << r.strategy << ',' << (r.source_unit_id ? *r.source_unit_id : "") << ','
            << buf << ',' << csv_safe(r.detail) << ',' << csv_safe(r.error) << '\n';
    }
}

std::vector<DetectionReport> read_reports_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty reports file '" + path + "'");
    std::vector<DetectionReport> reports;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) f.push_back(field);
        f.resize(10);
        DetectionReport r;
        r.unit_id = f[0];
        r.strategy = f[1];
        if (!f[2].empty()) r.source_unit_id = f[2];
        r.fp_percent = std::stod(f[3]);
        r.detected = f[4] == "1";
        r.valid = f[5] == "1";
        r.selection_score = std::stod(f[6]);
        r.wall_time_s = std::stod(f[7]);
        r.detail = f[8];
        r.error = f[9];
        reports.push_back(std::move(r));
    }
    return reports;
}

void write_summary_csv(const std::vector<DetectionReport>& reports,
                       const std::vector<std::string>& strategies, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    build_summary(reports, strategies, out);
}

int cmd_generate(const ExperimentConfig& cfg) {
    FleetConfig fleet_cfg = make_scenario(cfg.fleet, cfg.seed);
    GeneratedFleet fleet = generate_fleet(fleet_cfg, cfg.seed, cfg.fleet_dir);
    std::cout << "generated " << fleet.manifest.units.size() << " units under " << cfg.fleet_dir << '\n';
    return 0;
}

int cmd_run(const ExperimentConfig& cfg) {
    FleetManifest manifest = load_manifest(cfg.manifest_path);
    fs::create_directories(cfg.output_dir);
    fs::create_directories(fs::path(cfg.output_dir) / "models");
    fs::create_directories(fs::path(cfg.output_dir) / "curves");

    std::vector<UnitSeries> units;
    units.reserve(manifest.units.size());
    for (const auto& entry : manifest.units)
        units.push_back(load_unit(entry.csv_path, entry.fault_time, entry.unit_id));

    std::vector<const UnitSeries*> targets;
    std::vector<UnitSeries> sources;
    for (const auto& unit : units) {
        if (unit.fault_time)
            targets.push_back(&unit);
        else
            sources.push_back(unit);
    }
    if (targets.empty()) {
        std::cerr << "no faulted units in manifest; nothing to evaluate\n";
        return 1;
    }

    // every task owns exactly one result slot; merging happens after the join
    struct TaskResult {
        DetectionReport report;
        bool has_report = false;
        std::vector<DetectionReport> pair_reports;
        std::string pair_method;
        std::vector<SimilarityRanking> rankings;
    };
    std::vector<std::function<void()>> tasks;
    std::vector<TaskResult> results;
    std::map<std::pair<std::size_t, std::string>, std::size_t> report_slot;
    std::map<std::pair<std::size_t, std::string>, std::size_t> pairs_slot;

    const bool want_ufa = std::count(cfg.strategies.begin(), cfg.strategies.end(), "UFA") > 0;
    const std::string models_dir = (fs::path(cfg.output_dir) / "models").string();
    const std::string curves_dir = (fs::path(cfg.output_dir) / "curves").string();

    // reserve slots up front so tasks can hold stable pointers
    results.resize(targets.size() * (cfg.strategies.size() + 2));
    std::size_t next_slot = 0;

    for (std::size_t t = 0; t < targets.size(); ++t) {
        const UnitSeries& unit = *targets[t];
        auto seed_for = [&cfg, &unit](const std::string& what) {
            return derive_seed(cfg.seed, hash_string(what + ":" + unit.unit_id));
        };

        for (const auto& strategy : cfg.strategies) {
            if (strategy == "UFA" && cfg.all_pairs) continue;  // folded into the all-pairs task
            TaskResult* slot = &results[next_slot];
            report_slot[{t, strategy}] = next_slot++;
            tasks.push_back([slot, &unit, &sources, &cfg, seed_for, strategy, models_dir, curves_dir] {
                slot->has_report = true;
                try {
                    if (strategy == "H-9m" || strategy == "H-2m") {
                        Duration span = strategy == "H-9m" ? kNineMonths : kTwoMonths;
                        HelmEnsemble model;
                        slot->report = run_baseline(unit, span, cfg.hyper, seed_for(strategy), &model);
                        save_helm_ensemble(model, models_dir + "/" + unit.unit_id + "_" + strategy + ".json");
                    } else if (strategy == "H-Inc") {
                        slot->report = run_incremental_best_r(unit, cfg.r_grid, cfg.hyper, seed_for("H-Inc"));
                    } else if (strategy == "H-H" || strategy == "H-M") {
                        PairMethod method = strategy == "H-H" ? PairMethod::Helm : PairMethod::Mmd;
                        SimilarityRanking ranking;
                        HelmEnsemble model;
                        slot->report = run_pairwise(unit, sources, method, cfg.hyper, cfg.ufan,
                                                    seed_for(strategy), &ranking, &model);
                        slot->rankings.push_back(std::move(ranking));
                        save_helm_ensemble(model, models_dir + "/" + unit.unit_id + "_" + strategy + ".json");
                    } else if (strategy == "UFA") {
                        SimilarityRanking ranking;
                        UfanModel model;
                        slot->report = run_pairwise(unit, sources, PairMethod::Ufan, cfg.hyper, cfg.ufan,
                                                    seed_for("UFA"), &ranking, nullptr, &model);
                        slot->rankings.push_back(std::move(ranking));
                        save_ufan(model, models_dir + "/" + unit.unit_id + "_UFA.json");
                        write_training_curve_csv(model, curves_dir + "/ufan_" + unit.unit_id + "_" +
                                                            *slot->report.source_unit_id + ".csv");
                    } else {
                        throw std::runtime_error("unknown strategy '" + strategy + "'");
                    }
                } catch (const std::exception& e) {
                    DetectionReport r;
                    r.unit_id = unit.unit_id;
                    r.strategy = strategy;
                    r.error = e.what();
                    slot->report = std::move(r);
                }
            });
        }

        if (cfg.all_pairs) {
            TaskResult* helm_slot = &results[next_slot];
            pairs_slot[{t, "helm"}] = next_slot++;
            tasks.push_back([helm_slot, &unit, &sources, &cfg, seed_for] {
                helm_slot->pair_method = "helm";
                AllPairsResult result =
                    run_all_pairs(unit, sources, PairMethod::Helm, cfg.hyper, cfg.ufan, seed_for("pairs-helm"));
                helm_slot->pair_reports = std::move(result.reports);
            });

            // the all-pairs UFAN sweep doubles as the UFA selection run: the
            // report with the lowest adversarial loss is the UFA result
            TaskResult* ufan_slot = &results[next_slot];
            pairs_slot[{t, "ufan"}] = next_slot++;
            tasks.push_back([ufan_slot, &unit, &sources, &cfg, seed_for, want_ufa, models_dir, curves_dir] {
                AllPairsResult result =
                    run_all_pairs(unit, sources, PairMethod::Ufan, cfg.hyper, cfg.ufan, seed_for("pairs-ufan"));
                ufan_slot->pair_method = "ufan";
                ufan_slot->pair_reports = std::move(result.reports);
                if (!want_ufa) return;
                ufan_slot->has_report = true;
                try {
                    const DetectionReport* best = nullptr;
                    SimilarityRanking ranking;
                    ranking.target_id = unit.unit_id;
                    ranking.method = "ufan";
                    for (const auto& r : ufan_slot->pair_reports) {
                        if (!r.error.empty()) continue;
                        ranking.candidates.emplace_back(*r.source_unit_id, r.selection_score);
                        if (!best || r.selection_score < best->selection_score ||
                            (r.selection_score == best->selection_score &&
                             *r.source_unit_id < *best->source_unit_id))
                            best = &r;
                    }
                    if (!best) throw std::runtime_error("every UFAN pair failed");
                    std::sort(ranking.candidates.begin(), ranking.candidates.end(),
                              [](const auto& a, const auto& b) {
                                  if (a.second != b.second) return a.second < b.second;
                                  return a.first < b.first;
                              });
                    ufan_slot->rankings.push_back(std::move(ranking));
                    DetectionReport ufa = *best;
                    ufa.strategy = "UFA";
                    ufan_slot->report = std::move(ufa);

                    // retrain the winning alignment (same derived seed, hence
                    // identical weights) purely to serialize the artifacts
                    std::vector<UnitSeries> winner;
                    for (const auto& s : sources)
                        if (s.unit_id == *best->source_unit_id) winner.push_back(s);
                    UfanModel model;
                    run_pairwise(unit, winner, PairMethod::Ufan, cfg.hyper, cfg.ufan,
                                 seed_for("pairs-ufan"), nullptr, nullptr, &model);
                    save_ufan(model, models_dir + "/" + unit.unit_id + "_UFA.json");
                    write_training_curve_csv(model, curves_dir + "/ufan_" + unit.unit_id + "_" +
                                                        *best->source_unit_id + ".csv");
                } catch (const std::exception& e) {
                    DetectionReport r;
                    r.unit_id = unit.unit_id;
                    r.strategy = "UFA";
                    r.error = e.what();
                    ufan_slot->report = std::move(r);
                }
            });
        }
    }

    run_parallel(tasks, cfg.parallelism);

    // deterministic merge: manifest target order, configured strategy order
    std::vector<DetectionReport> reports, helm_pairs, ufan_pairs;
    std::vector<SimilarityRanking> rankings;
    for (std::size_t t = 0; t < targets.size(); ++t) {
        for (const auto& strategy : cfg.strategies) {
            std::size_t slot_index;
            if (auto it = report_slot.find({t, strategy}); it != report_slot.end())
                slot_index = it->second;
            else if (strategy == "UFA" && cfg.all_pairs)
                slot_index = pairs_slot.at({t, "ufan"});
            else
                continue;
            if (results[slot_index].has_report) reports.push_back(results[slot_index].report);
        }
        for (const auto& method : {"helm", "ufan"}) {
            auto it = pairs_slot.find({t, method});
            if (it == pairs_slot.end()) continue;
            auto& dst = std::string(method) == "helm" ? helm_pairs : ufan_pairs;
            for (auto& r : results[it->second].pair_reports) dst.push_back(std::move(r));
        }
        std::vector<SimilarityRanking> target_rankings;
        for (auto& [key, idx] : report_slot)
            if (key.first == t)
                for (auto& r : results[idx].rankings) target_rankings.push_back(std::move(r));
        for (auto& [key, idx] : pairs_slot)
            if (key.first == t)
                for (auto& r : results[idx].rankings) target_rankings.push_back(std::move(r));
        std::sort(target_rankings.begin(), target_rankings.end(),
                  [](const auto& a, const auto& b) { return a.method < b.method; });
        for (auto& r : target_rankings) rankings.push_back(std::move(r));
    }

    write_reports_csv(reports, (fs::path(cfg.output_dir) / "reports.csv").string());
    if (!helm_pairs.empty())
        write_reports_csv(helm_pairs, (fs::path(cfg.output_dir) / "pairs_helm.csv").string());
    if (!ufan_pairs.empty())
        write_reports_csv(ufan_pairs, (fs::path(cfg.output_dir) / "pairs_ufan.csv").string());
    if (!rankings.empty()) write_ranking_csv(rankings, (fs::path(cfg.output_dir) / "rankings.csv").string());

    std::vector<DetectionReport> all = reports;
    all.insert(all.end(), helm_pairs.begin(), helm_pairs.end());
    all.insert(all.end(), ufan_pairs.begin(), ufan_pairs.end());
    write_summary_csv(all, cfg.strategies, (fs::path(cfg.output_dir) / "summary.csv").string());

    int failures = 0;
    for (const auto& r : reports)
        if (!r.error.empty()) {
            ++failures;
            std::cerr << r.unit_id << '/' << r.strategy << " failed: " << r.error << '\n';
        }
    std::cout << "wrote " << reports.size() << " strategy reports ("
              << helm_pairs.size() + ufan_pairs.size() << " pair reports) to " << cfg.output_dir << '\n';
    return failures == static_cast<int>(reports.size()) && !reports.empty() ? 1 : 0;
}

int cmd_sweep(const ExperimentConfig& cfg, const std::vector<int>& thresholds) {
    auto helm_pairs = read_reports_if_present((fs::path(cfg.output_dir) / "pairs_helm.csv").string());
    auto ufan_pairs = read_reports_if_present((fs::path(cfg.output_dir) / "pairs_ufan.csv").string());
    if (helm_pairs.empty() && ufan_pairs.empty()) {
        std::cerr << "no all-pairs outputs under " << cfg.output_dir << "; run with all_pairs = true first\n";
        return 1;
    }
    std::vector<int> thr = thresholds;
    if (thr.empty())
        for (int v = 1; v <= 25; ++v) thr.push_back(v);

    std::string path = (fs::path(cfg.output_dir) / "sweep.csv").string();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "unit_id,method,threshold,valid_count\n";
    auto emit = [&](const std::vector<DetectionReport>& pairs, const std::string& method) {
        std::set<std::string> units;
        for (const auto& r : pairs) units.insert(r.unit_id);
        for (const auto& unit : units) {
            for (int t : thr) {
                int count = 0;
                for (const auto& r : pairs)
                    if (r.unit_id == unit && r.error.empty() && r.detected && r.fp_percent < t) ++count;
                out << unit << ',' << method << ',' << t << ',' << count << '\n';
            }
        }
    };
    emit(helm_pairs, "helm");
    emit(ufan_pairs, "ufan");
    std::cout << "wrote " << path << '\n';
    return 0;
}

int cmd_report(const ExperimentConfig& cfg) {
    auto reports = read_reports_if_present((fs::path(cfg.output_dir) / "reports.csv").string());
    if (reports.empty()) {
        std::cerr << "no reports.csv under " << cfg.output_dir << '\n';
        return 1;
    }
    auto helm_pairs = read_reports_if_present((fs::path(cfg.output_dir) / "pairs_helm.csv").string());
    auto ufan_pairs = read_reports_if_present((fs::path(cfg.output_dir) / "pairs_ufan.csv").string());
    std::vector<DetectionReport> all = reports;
    all.insert(all.end(), helm_pairs.begin(), helm_pairs.end());
    all.insert(all.end(), ufan_pairs.begin(), ufan_pairs.end());

    std::ostringstream rebuilt;
    build_summary(all, cfg.strategies, rebuilt);
    std::cout << rebuilt.str();

    std::string summary_path = (fs::path(cfg.output_dir) / "summary.csv").string();
    if (fs::exists(summary_path)) {
        std::ifstream in(summary_path);
        std::stringstream existing;
        existing << in.rdbuf();
        if (existing.str() != rebuilt.str()) {
            std::cerr << "summary.csv does not match a recount from the report CSVs\n";
            return 1;
        }
        std::cout << "summary.csv matches the recount\n";
    }
    return 0;
}

}  // namespace fleetmon
