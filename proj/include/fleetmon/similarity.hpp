#pragma once

#include "fleetmon/dataset.hpp"
#include "fleetmon/helm.hpp"

#include <string>
#include <vector>

namespace fleetmon {

// Gaussian kernel widths; k_w(a,b) = exp(-|a-b|^2 / (2 w^2)).
struct KernelBank {
    std::vector<double> widths{0.05, 0.1, 0.2, 0.5, 1.0, 2.0};
};

struct SimilarityRanking {
    std::string target_id;
    std::string method;
    // (unit_id, distance), ascending by distance, ties broken by unit_id
    std::vector<std::pair<std::string, double>> candidates;
};

// Mean ensemble magnification of the candidate rows under the target's
// ensemble. The candidate must already be normalized with the target's
// normalizer.
double helm_distance(const HelmEnsemble& target_ensemble, const Matrix& candidate);

// Biased (V-statistic) squared MMD summed over the kernel bank. Symmetric in
// (X, Y) bit for bit and zero for identical samples.
double mmd_squared(const Matrix& X, const Matrix& Y, const KernelBank& bank);

// Splits both windows into consecutive `chunk` spans, skips chunks with fewer
// than 10 rows, caps each chunk at `row_cap` rows by seeded uniform
// subsampling, and returns the mean mmd_squared over all chunk pairs.
double mmd_chunked(const UnitSeries& X, const UnitSeries& Y, const KernelBank& bank,
                   Duration chunk = kOneMonth, Eigen::Index row_cap = 10000);

enum class SimilarityMethod { Helm, Mmd };

struct RankCandidate {
    std::string unit_id;
    Matrix helm_view;       // candidate rows in the target's normalized space
    const UnitSeries* mmd_view = nullptr;  // candidate in its own normalized space
};

SimilarityRanking rank_candidates(const std::string& target_id, SimilarityMethod method,
                                  const HelmEnsemble* target_ensemble, const UnitSeries* target_mmd_view,
                                  const std::vector<RankCandidate>& candidates, const KernelBank& bank);

// Full pipeline on raw series: cleans everything, trains the target's
// two-month ensemble (helm method) or builds self-normalized views (mmd
// method), then ranks the fleet ascending by distance.
SimilarityRanking rank_sources(const UnitSeries& target, const std::vector<UnitSeries>& fleet,
                               SimilarityMethod method, const HelmHyper& hyper, std::uint64_t seed,
                               const KernelBank& bank = {});

void write_ranking_csv(const std::vector<SimilarityRanking>& rankings, const std::string& path);

}  // namespace fleetmon
