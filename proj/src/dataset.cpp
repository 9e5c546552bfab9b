#include "fleetmon/dataset.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fleetmon {

namespace {

// Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

double parse_value(const std::string& field) {
    if (field.empty()) return std::nan("");
    char* end = nullptr;
    double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str()) throw std::runtime_error("unparseable value '" + field + "'");
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

TimePoint parse_iso8601(const std::string& text) {
    int y, mo, d, h, mi, s;
    if (std::sscanf(text.c_str(), "%d-%d-%dT%d:%d:%dZ", &y, &mo, &d, &h, &mi, &s) != 6)
        throw std::runtime_error("bad ISO-8601 timestamp '" + text + "'");
    return days_from_civil(y, mo, d) * kSecondsPerDay + h * 3600 + mi * 60 + s;
}

std::string format_iso8601(TimePoint t) {
    std::int64_t days = t / kSecondsPerDay;
    std::int64_t sod = t % kSecondsPerDay;
    if (sod < 0) {
        sod += kSecondsPerDay;
        --days;
    }
    int y, m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02lld:%02lld:%02lldZ", y, m, d,
                  static_cast<long long>(sod / 3600), static_cast<long long>((sod / 60) % 60),
                  static_cast<long long>(sod % 60));
    return buf;
}

TimePoint UnitSeries::start() const {
    if (timestamps.empty()) throw std::runtime_error("empty series has no start");
    return timestamps.front();
}

TimePoint UnitSeries::end() const {
    if (timestamps.empty()) throw std::runtime_error("empty series has no end");
    return timestamps.back();
}

UnitSeries UnitSeries::slice(TimePoint begin, TimePoint end) const {
    auto lo = std::lower_bound(timestamps.begin(), timestamps.end(), begin);
    auto hi = std::lower_bound(timestamps.begin(), timestamps.end(), end);
    auto i0 = static_cast<Eigen::Index>(lo - timestamps.begin());
    auto n = static_cast<Eigen::Index>(hi - lo);
    UnitSeries out;
    out.unit_id = unit_id;
    out.signal_names = signal_names;
    out.fault_time = fault_time;
    out.timestamps.assign(lo, hi);
    out.values = values.middleRows(i0, n);
    return out;
}

UnitSeries load_unit(const std::string& path, std::optional<TimePoint> fault_time,
                     const std::string& unit_id) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty file '" + path + "'");
    auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "timestamp")
        throw std::runtime_error("bad CSV header in '" + path + "'");

    UnitSeries series;
    series.unit_id = unit_id.empty() ? std::filesystem::path(path).stem().string() : unit_id;
    series.signal_names.assign(header.begin() + 1, header.end());
    series.fault_time = fault_time;

    const std::size_t n_signals = series.signal_names.size();
    std::vector<double> flat;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != n_signals + 1)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected " +
                                     std::to_string(n_signals + 1) + " fields, got " +
                                     std::to_string(fields.size()));
        TimePoint t = parse_iso8601(fields[0]);
        if (!series.timestamps.empty() && t <= series.timestamps.back())
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": timestamps not strictly increasing");
        series.timestamps.push_back(t);
        for (std::size_t j = 1; j < fields.size(); ++j) flat.push_back(parse_value(fields[j]));
    }
    if (series.timestamps.empty()) throw std::runtime_error("no data rows in '" + path + "'");

    const auto n = static_cast<Eigen::Index>(series.timestamps.size());
    series.values.resize(n, static_cast<Eigen::Index>(n_signals));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < series.values.cols(); ++j)
            series.values(i, j) = flat[static_cast<std::size_t>(i) * n_signals + j];
    return series;
}

void write_unit_csv(const UnitSeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "timestamp";
    for (const auto& name : series.signal_names) out << ',' << name;
    out << '\n';
    char buf[32];
    for (Eigen::Index i = 0; i < series.rows(); ++i) {
        out << format_iso8601(series.timestamps[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < series.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", series.values(i, j));
            out << ',' << buf;
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

UnitSeries clean(const UnitSeries& series) {
    std::vector<Eigen::Index> keep;
    keep.reserve(static_cast<std::size_t>(series.rows()));
    for (Eigen::Index i = 0; i < series.rows(); ++i) {
        bool ok = true;
        for (Eigen::Index j = 0; j < series.cols(); ++j) {
            double v = series.values(i, j);
            if (!std::isfinite(v) || v == 0.0) {
                ok = false;
                break;
            }
        }
        if (ok) keep.push_back(i);
    }
    if (keep.empty()) throw std::runtime_error("clean removed every row of unit '" + series.unit_id + "'");

    UnitSeries out;
    out.unit_id = series.unit_id;
    out.signal_names = series.signal_names;
    out.fault_time = series.fault_time;
    out.timestamps.reserve(keep.size());
    out.values.resize(static_cast<Eigen::Index>(keep.size()), series.cols());
    Eigen::Index r = 0;
    for (Eigen::Index i : keep) {
        out.timestamps.push_back(series.timestamps[static_cast<std::size_t>(i)]);
        out.values.row(r++) = series.values.row(i);
    }
    return out;
}

Normalizer fit_normalizer(const UnitSeries& series, TimePoint window_begin, TimePoint window_end) {
    UnitSeries window = series.slice(window_begin, window_end);
    if (window.rows() < 2) throw std::runtime_error("normalizer window has fewer than 2 rows");

    Normalizer norm;
    norm.p1.resize(window.cols());
    norm.p99.resize(window.cols());
    std::vector<double> col(static_cast<std::size_t>(window.rows()));
    for (Eigen::Index j = 0; j < window.cols(); ++j) {
        for (Eigen::Index i = 0; i < window.rows(); ++i) col[static_cast<std::size_t>(i)] = window.values(i, j);
        std::sort(col.begin(), col.end());
        norm.p1[j] = percentile_sorted(col, 1.0);
        norm.p99[j] = percentile_sorted(col, 99.0);
        if (!(norm.p1[j] < norm.p99[j]))
            throw std::runtime_error("constant signal '" + window.signal_names[static_cast<std::size_t>(j)] +
                                     "' in normalizer window");
    }
    return norm;
}

Matrix Normalizer::apply(const Matrix& raw) const {
    if (raw.cols() != p1.size()) throw std::invalid_argument("normalizer: signal count mismatch");
    Matrix out(raw.rows(), raw.cols());
    for (Eigen::Index j = 0; j < raw.cols(); ++j)
        out.col(j) = 2.0 * (raw.col(j).array() - p1[j]) / (p99[j] - p1[j]) - 1.0;
    return out;
}

UnitSeries normalize(const UnitSeries& series, const Normalizer& norm) {
    UnitSeries out = series;
    out.values = norm.apply(series.values);
    return out;
}

UnitSeries normalize_and_filter_train(const UnitSeries& series, const Normalizer& norm) {
    UnitSeries normed = normalize(series, norm);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < normed.rows(); ++i)
        if (!(normed.values.row(i).array() > 3.0).any()) keep.push_back(i);
    if (keep.empty()) throw std::runtime_error("training filter removed every row");

    UnitSeries out;
    out.unit_id = normed.unit_id;
    out.signal_names = normed.signal_names;
    out.fault_time = normed.fault_time;
    out.values.resize(static_cast<Eigen::Index>(keep.size()), normed.cols());
    Eigen::Index r = 0;
    for (Eigen::Index i : keep) {
        out.timestamps.push_back(normed.timestamps[static_cast<std::size_t>(i)]);
        out.values.row(r++) = normed.values.row(i);
    }
    return out;
}

SplitSpec split(const UnitSeries& series, Duration train_span) {
    if (series.timestamps.empty()) throw std::runtime_error("cannot split empty series");
    SplitSpec spec;
    spec.train_begin = series.start();
    spec.train_end = spec.train_begin + train_span;
    spec.fault_time = series.fault_time;
    if (series.end() <= spec.train_end) throw std::runtime_error("series shorter than training window");
    if (series.fault_time) {
        spec.blackout_start = *series.fault_time - kOneMonth;
        if (spec.blackout_start <= spec.train_end)
            throw std::runtime_error("blackout window overlaps training window");
    } else {
        spec.blackout_start = series.end() + 1;  // healthy-eval covers everything after training
    }
    return spec;
}

FleetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest '" + path + "'");
    nlohmann::json doc = nlohmann::json::parse(in);
    auto dir = std::filesystem::path(path).parent_path();

    FleetManifest manifest;
    for (const auto& u : doc.at("units")) {
        ManifestEntry entry;
        entry.unit_id = u.at("unit_id").get<std::string>();
        auto csv = std::filesystem::path(u.at("csv").get<std::string>());
        entry.csv_path = csv.is_absolute() ? csv.string() : (dir / csv).string();
        if (u.contains("fault_time") && !u.at("fault_time").is_null())
            entry.fault_time = parse_iso8601(u.at("fault_time").get<std::string>());
        manifest.units.push_back(std::move(entry));
    }
    return manifest;
}

void write_manifest(const FleetManifest& manifest, const std::string& path) {
    nlohmann::json doc;
    doc["units"] = nlohmann::json::array();
    auto dir = std::filesystem::path(path).parent_path();
    for (const auto& u : manifest.units) {
        nlohmann::json j;
        j["unit_id"] = u.unit_id;
        j["csv"] = std::filesystem::relative(u.csv_path, dir).string();
        if (u.fault_time)
            j["fault_time"] = format_iso8601(*u.fault_time);
        else
            j["fault_time"] = nullptr;
        doc["units"].push_back(j);
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest '" + path + "'");
    out << doc.dump(2) << '\n';
}

}  // namespace fleetmon
