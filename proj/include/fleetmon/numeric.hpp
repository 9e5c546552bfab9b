#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace fleetmon {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// splitmix64 step, used to derive independent sub-seeds from a base seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(base ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

// FNV-1a, used to fold string ids into seed streams.
inline std::uint64_t hash_string(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Deterministic generator with portable output mapping: identical seeds give
// identical streams on every platform (no std::distribution involved).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(splitmix64(seed)) {}

    std::uint64_t next_u64() {
        // xorshift64* keeps the state tiny and the stream portable.
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545f4914f6cdd1dULL;
    }

    // uniform on [0, 1), 53-bit mantissa
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // Box-Muller on open (0,1)
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // integer in [0, n)
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Percentile by linear interpolation between order statistics: for p in
// [0,100] the rank is p/100*(n-1) and the value is interpolated between the
// two bracketing sorted entries. Every percentile in this library (normalizer
// anchors, one-class thresholds) uses this rule.
inline double percentile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("percentile: empty input");
    if (p < 0.0 || p > 100.0) throw std::invalid_argument("percentile: p outside [0,100]");
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    double rank = p / 100.0 * static_cast<double>(n - 1);
    auto lo = static_cast<std::size_t>(rank);
    if (lo >= n - 1) return sorted[n - 1];
    double frac = rank - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double percentile(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    return percentile_sorted(values, p);
}

inline double percentile(const Vector& values, double p) {
    return percentile(std::vector<double>(values.data(), values.data() + values.size()), p);
}

}  // namespace fleetmon
