#include <doctest.h>

#include "fleetmon/dataset.hpp"

#include <filesystem>
#include <fstream>

using namespace fleetmon;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    auto dir = fs::temp_directory_path() / "fleetmon_tests";
    fs::create_directories(dir);
    return dir / name;
}

UnitSeries make_series(const std::vector<TimePoint>& times, const Matrix& values) {
    UnitSeries s;
    s.unit_id = "test";
    s.timestamps = times;
    s.values = values;
    for (Eigen::Index j = 0; j < values.cols(); ++j) s.signal_names.push_back("s" + std::to_string(j));
    return s;
}

UnitSeries regular_series(Eigen::Index rows, Eigen::Index cols, Duration step = 300,
                          TimePoint start = 0, double base = 1.0) {
    std::vector<TimePoint> times;
    Matrix values(rows, cols);
    Rng rng(99);
    for (Eigen::Index i = 0; i < rows; ++i) {
        times.push_back(start + i * step);
        for (Eigen::Index j = 0; j < cols; ++j) values(i, j) = base + rng.uniform(0.0, 100.0);
    }
    return make_series(times, values);
}

}  // namespace

TEST_CASE("iso8601 round trip") {
    CHECK(parse_iso8601("1970-01-01T00:00:00Z") == 0);
    CHECK(parse_iso8601("2015-01-01T00:00:00Z") == 1420070400);
    CHECK(format_iso8601(1420070400) == "2015-01-01T00:00:00Z");
    for (TimePoint t : {TimePoint(0), TimePoint(1234567890), TimePoint(1700000000)})
        CHECK(parse_iso8601(format_iso8601(t)) == t);
    CHECK_THROWS(parse_iso8601("not-a-time"));
}

TEST_CASE("load_unit ingests well formed CSV") {
    auto path = temp_file("ok.csv");
    {
        std::ofstream out(path);
        out << "timestamp,a,b\n";
        out << "2020-01-01T00:00:00Z,1.5,2.5\n";
        out << "2020-01-01T00:05:00Z,3.5,4.5\n";
        out << "2020-01-01T00:10:00Z,5.5,6.5\n";
    }
    UnitSeries s = load_unit(path.string());
    CHECK(s.rows() == 3);
    CHECK(s.cols() == 2);
    CHECK(s.signal_names == std::vector<std::string>{"a", "b"});
    CHECK(s.values(2, 1) == 6.5);
    CHECK(s.timestamps[1] - s.timestamps[0] == 300);
}

TEST_CASE("load_unit rejects bad input") {
    auto back = temp_file("backwards.csv");
    {
        std::ofstream out(back);
        out << "timestamp,a\n";
        out << "2020-01-01T00:05:00Z,1\n";
        out << "2020-01-01T00:00:00Z,2\n";
    }
    CHECK_THROWS(load_unit(back.string()));

    auto empty = temp_file("empty.csv");
    { std::ofstream out(empty); }
    CHECK_THROWS(load_unit(empty.string()));

    auto headeronly = temp_file("headeronly.csv");
    {
        std::ofstream out(headeronly);
        out << "timestamp,a\n";
    }
    CHECK_THROWS(load_unit(headeronly.string()));
}

TEST_CASE("load_unit keeps 24 signal columns and missing markers") {
    auto path = temp_file("wide.csv");
    {
        std::ofstream out(path);
        out << "timestamp";
        for (int j = 0; j < 24; ++j) out << ",sig" << j;
        out << "\n2020-01-01T00:00:00Z";
        for (int j = 0; j < 24; ++j) out << "," << j + 1;
        out << "\n2020-01-01T00:05:00Z,NaN";
        for (int j = 1; j < 23; ++j) out << "," << j + 1;
        out << ",\n";
    }
    UnitSeries s = load_unit(path.string());
    CHECK(s.cols() == 24);
    CHECK(std::isnan(s.values(1, 0)));
    CHECK(std::isnan(s.values(1, 23)));
}

TEST_CASE("clean drops rows with missing or zero entries") {
    Matrix values(3, 2);
    values << 1, 2, 0, 5, 3, 4;
    UnitSeries s = make_series({0, 300, 600}, values);
    UnitSeries cleaned = clean(s);
    CHECK(cleaned.rows() == 2);
    CHECK(cleaned.values(0, 0) == 1);
    CHECK(cleaned.values(1, 1) == 4);
    CHECK(cleaned.timestamps == std::vector<TimePoint>{0, 600});

    UnitSeries again = clean(cleaned);  // idempotent
    CHECK(again.values == cleaned.values);
    CHECK(again.timestamps == cleaned.timestamps);
}

TEST_CASE("clean handles single missing cell and the all-removed case") {
    Matrix values = Matrix::Constant(10, 3, 2.0);
    values(4, 1) = std::nan("");
    UnitSeries s = regular_series(10, 3);
    s.values = values;
    CHECK(clean(s).rows() == 9);

    s.values.setZero();
    CHECK_THROWS(clean(s));
}

TEST_CASE("clean is a no-op on untouched data") {
    UnitSeries s = regular_series(50, 4);
    UnitSeries cleaned = clean(s);
    CHECK(cleaned.rows() == 50);
    CHECK(cleaned.values == s.values);
}

TEST_CASE("normalizer maps the percentile anchors to -1 and +1") {
    UnitSeries s = regular_series(500, 3);
    Normalizer norm = fit_normalizer(s, 0, s.end() + 1);
    for (Eigen::Index j = 0; j < 3; ++j) {
        Matrix probe(2, 3);
        probe.row(0).setConstant(norm.p1[j]);
        probe.row(1).setConstant(norm.p99[j]);
        Matrix mapped = norm.apply(probe);
        CHECK(mapped(0, j) == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(mapped(1, j) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("normalizer on uniform 0..100 sends the midpoint near zero") {
    std::vector<TimePoint> times;
    Matrix values(101, 1);
    for (int i = 0; i <= 100; ++i) {
        times.push_back(i * 300);
        values(i, 0) = i;
    }
    UnitSeries s = make_series(times, values);
    Normalizer norm = fit_normalizer(s, 0, s.end() + 1);
    // oracle: sorted percentiles of 0..100 are exactly 1 and 99
    CHECK(norm.p1[0] == doctest::Approx(1.0));
    CHECK(norm.p99[0] == doctest::Approx(99.0));
    Matrix probe(1, 1);
    probe << 50.0;
    CHECK(std::abs(norm.apply(probe)(0, 0)) < 1e-9);
}

TEST_CASE("normalizer rejects constant signals") {
    UnitSeries s = regular_series(100, 2);
    s.values.col(1).setConstant(5.0);
    CHECK_THROWS(fit_normalizer(s, 0, s.end() + 1));
}

TEST_CASE("normalization preserves rank order per signal") {
    UnitSeries s = regular_series(300, 3);
    Normalizer norm = fit_normalizer(s, 0, s.end() + 1);
    Matrix mapped = norm.apply(s.values);
    Rng rng(3);
    for (int probe = 0; probe < 200; ++probe) {
        auto i = static_cast<Eigen::Index>(rng.below(300));
        auto k = static_cast<Eigen::Index>(rng.below(300));
        auto j = static_cast<Eigen::Index>(rng.below(3));
        if (s.values(i, j) < s.values(k, j)) CHECK(mapped(i, j) < mapped(k, j));
    }
}

TEST_CASE("at most 2% of fit-window values map outside [-1, 1]") {
    for (std::uint64_t seed : {11u, 22u, 33u}) {
        Rng rng(seed);
        auto rows = static_cast<Eigen::Index>(200 + rng.below(800));
        UnitSeries s = regular_series(rows, 2);
        Rng value_rng(seed + 100);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < 2; ++j) s.values(i, j) = value_rng.normal() * 10.0 + 50.0;
        Normalizer norm = fit_normalizer(s, 0, s.end() + 1);
        Matrix mapped = norm.apply(s.values);
        for (Eigen::Index j = 0; j < 2; ++j) {
            auto outside = (mapped.col(j).array().abs() > 1.0).count();
            // interpolated percentiles admit up to floor(0.01(n-1))+1 points
            // strictly past each anchor, hence the +2/n discretization term
            double bound = 0.02 + 2.0 / static_cast<double>(rows);
            CHECK(static_cast<double>(outside) / static_cast<double>(rows) <= bound);
        }
    }
}

TEST_CASE("training filter drops rows with any normalized value above 3") {
    UnitSeries s = regular_series(200, 2);
    Normalizer norm = fit_normalizer(s, 0, s.end() + 1);
    // append two synthetic rows: one normalizing past 3, one below
    UnitSeries extended = s;
    extended.timestamps.push_back(s.end() + 300);
    extended.timestamps.push_back(s.end() + 600);
    Matrix extra(2, 2);
    // invert the map: value for normalized v is p1 + (v+1)(p99-p1)/2
    auto raw_for = [&](double v, int j) { return norm.p1[j] + (v + 1.0) * (norm.p99[j] - norm.p1[j]) / 2.0; };
    extra << raw_for(0.5, 0), raw_for(4.0, 1), raw_for(0.5, 0), raw_for(2.9, 1);
    extended.values = Matrix(202, 2);
    extended.values.topRows(200) = s.values;
    extended.values.bottomRows(2) = extra;

    UnitSeries filtered = normalize_and_filter_train(extended, norm);
    CHECK(filtered.rows() == 201);  // the 4.0 row is gone
    CHECK(filtered.values.bottomRows(1)(0, 1) == doctest::Approx(2.9));

    UnitSeries unfiltered = normalize(extended, norm);
    CHECK(unfiltered.rows() == 202);  // evaluation data is never filtered
}

TEST_CASE("training filter on empty result errors") {
    UnitSeries s = regular_series(20, 1);
    Normalizer norm;
    norm.p1 = Vector::Constant(1, -1000.0);
    norm.p99 = Vector::Constant(1, -999.0);  // everything maps far above 3
    CHECK_THROWS(normalize_and_filter_train(s, norm));
}

TEST_CASE("split follows the two-month / blackout / fault protocol") {
    // 12 months of data, fault at day 300 (month 10)
    UnitSeries s = regular_series(360 * 24, 1, 3600);
    s.fault_time = 300 * kSecondsPerDay;
    SplitSpec spec = split(s);
    CHECK(spec.train_begin == 0);
    CHECK(spec.train_end == kTwoMonths);
    CHECK(spec.blackout_start == 270 * kSecondsPerDay);
    CHECK(*spec.fault_time == 300 * kSecondsPerDay);

    // windows are pairwise disjoint by construction
    CHECK(spec.train_end <= spec.blackout_start);
    CHECK(spec.blackout_start <= *spec.fault_time);
}

TEST_CASE("split without fault leaves the fault window empty") {
    UnitSeries s = regular_series(100 * 24, 1, 3600);
    SplitSpec spec = split(s);
    CHECK_FALSE(spec.fault_time.has_value());
    CHECK(spec.blackout_start > s.end());
}

TEST_CASE("split rejects short series and early faults") {
    UnitSeries s = regular_series(100, 1, 3600);  // ~4 days
    CHECK_THROWS(split(s));

    UnitSeries s2 = regular_series(360 * 24, 1, 3600);
    s2.fault_time = static_cast<TimePoint>(75) * kSecondsPerDay;  // blackout overlaps training
    CHECK_THROWS(split(s2));
}

TEST_CASE("manifest round trip") {
    auto dir = fs::temp_directory_path() / "fleetmon_tests" / "manifest";
    fs::create_directories(dir);
    FleetManifest manifest;
    manifest.units.push_back({"u1", (dir / "u1.csv").string(), parse_iso8601("2020-06-01T00:00:00Z")});
    manifest.units.push_back({"u2", (dir / "u2.csv").string(), std::nullopt});
    auto path = (dir / "manifest.json").string();
    write_manifest(manifest, path);
    FleetManifest loaded = load_manifest(path);
    REQUIRE(loaded.units.size() == 2);
    CHECK(loaded.units[0].unit_id == "u1");
    CHECK(*loaded.units[0].fault_time == parse_iso8601("2020-06-01T00:00:00Z"));
    CHECK_FALSE(loaded.units[1].fault_time.has_value());
    CHECK(loaded.units[0].csv_path == (dir / "u1.csv").string());
}
