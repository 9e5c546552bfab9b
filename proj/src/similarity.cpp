#include "fleetmon/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace fleetmon {

namespace {

constexpr std::uint64_t kSubsampleSeed = 0x9d2c5680a1b3c4d5ULL;

bool lex_less(const Matrix& A, const Matrix& B) {
    if (A.rows() != B.rows()) return A.rows() < B.rows();
    if (A.cols() != B.cols()) return A.cols() < B.cols();
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            if (A(i, j) != B(i, j)) return A(i, j) < B(i, j);
    return false;
}

// Sum of k_w(a_i, b_j) over all row pairs, per width, accumulated blockwise
// so no full distance matrix is ever held.
void accumulate_kernel_sums(const Matrix& A, const Matrix& B, const std::vector<double>& widths,
                            std::vector<double>& sums) {
    constexpr Eigen::Index kBlock = 512;
    Vector a_sq = A.rowwise().squaredNorm();
    Vector b_sq = B.rowwise().squaredNorm();
    for (Eigen::Index i0 = 0; i0 < A.rows(); i0 += kBlock) {
        const Eigen::Index ni = std::min(kBlock, A.rows() - i0);
        for (Eigen::Index j0 = 0; j0 < B.rows(); j0 += kBlock) {
            const Eigen::Index nj = std::min(kBlock, B.rows() - j0);
            Matrix d2 = (-2.0 * A.middleRows(i0, ni) * B.middleRows(j0, nj).transpose());
            d2.colwise() += a_sq.segment(i0, ni);
            d2.rowwise() += b_sq.segment(j0, nj).transpose();
            d2 = d2.cwiseMax(0.0);
            for (std::size_t w = 0; w < widths.size(); ++w)
                sums[w] += (d2 / (-2.0 * widths[w] * widths[w])).array().exp().sum();
        }
    }
}

Matrix cap_rows(const Matrix& M, Eigen::Index row_cap, std::uint64_t seed) {
    if (M.rows() <= row_cap) return M;
    // uniform subsample without replacement, original order preserved
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(M.rows()));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<Eigen::Index>(i);
    Rng rng(seed);
    rng.shuffle(idx);
    idx.resize(static_cast<std::size_t>(row_cap));
    std::sort(idx.begin(), idx.end());
    Matrix out(row_cap, M.cols());
    for (Eigen::Index i = 0; i < row_cap; ++i) out.row(i) = M.row(idx[static_cast<std::size_t>(i)]);
    return out;
}

std::vector<Matrix> month_chunks(const UnitSeries& series, Duration chunk, Eigen::Index row_cap) {
    std::vector<Matrix> chunks;
    if (series.timestamps.empty()) return chunks;
    TimePoint begin = series.start();
    TimePoint last = series.end();
    std::uint64_t chunk_index = 0;
    for (TimePoint t = begin; t <= last; t += chunk, ++chunk_index) {
        UnitSeries piece = series.slice(t, t + chunk);
        if (piece.rows() < 10) continue;  // spec floor: skip near-empty chunks
        chunks.push_back(cap_rows(piece.values, row_cap, derive_seed(kSubsampleSeed, chunk_index)));
    }
    return chunks;
}

}  // namespace

double helm_distance(const HelmEnsemble& target_ensemble, const Matrix& candidate) {
    if (candidate.rows() == 0) throw std::invalid_argument("helm_distance: empty candidate");
    return ensemble_score(target_ensemble, candidate).mean();
}

double mmd_squared(const Matrix& X, const Matrix& Y, const KernelBank& bank) {
    if (X.cols() != Y.cols()) throw std::invalid_argument("mmd_squared: column mismatch");
    if (X.rows() < 1 || Y.rows() < 1) throw std::invalid_argument("mmd_squared: empty sample");
    if (bank.widths.empty()) throw std::invalid_argument("mmd_squared: empty kernel bank");
    for (double w : bank.widths)
        if (!(w > 0.0)) throw std::invalid_argument("mmd_squared: kernel width must be > 0");

    // Canonical argument order makes the estimator symmetric bit for bit.
    const Matrix* A = &X;
    const Matrix* B = &Y;
    if (lex_less(Y, X)) std::swap(A, B);

    const auto n = static_cast<double>(A->rows());
    const auto m = static_cast<double>(B->rows());
    std::vector<double> s_aa(bank.widths.size(), 0.0), s_bb(bank.widths.size(), 0.0),
        s_ab(bank.widths.size(), 0.0);
    accumulate_kernel_sums(*A, *A, bank.widths, s_aa);
    accumulate_kernel_sums(*B, *B, bank.widths, s_bb);
    accumulate_kernel_sums(*A, *B, bank.widths, s_ab);

    double total = 0.0;
    for (std::size_t w = 0; w < bank.widths.size(); ++w)
        total += s_aa[w] / (n * n) + s_bb[w] / (m * m) - 2.0 * s_ab[w] / (n * m);
    return total;
}

double mmd_chunked(const UnitSeries& X, const UnitSeries& Y, const KernelBank& bank, Duration chunk,
                   Eigen::Index row_cap) {
    if (X.rows() == 0 || Y.rows() == 0) throw std::invalid_argument("mmd_chunked: empty window");
    auto x_chunks = month_chunks(X, chunk, row_cap);
    auto y_chunks = month_chunks(Y, chunk, row_cap);
    if (x_chunks.empty() || y_chunks.empty())
        throw std::runtime_error("mmd_chunked: all chunks below the 10-row floor");

    double total = 0.0;
    for (const auto& xc : x_chunks)
        for (const auto& yc : y_chunks) total += mmd_squared(xc, yc, bank);
    return total / (static_cast<double>(x_chunks.size()) * static_cast<double>(y_chunks.size()));
}

SimilarityRanking rank_candidates(const std::string& target_id, SimilarityMethod method,
                                  const HelmEnsemble* target_ensemble, const UnitSeries* target_mmd_view,
                                  const std::vector<RankCandidate>& candidates, const KernelBank& bank) {
    if (candidates.empty()) throw std::invalid_argument("rank_candidates: empty fleet");

    SimilarityRanking ranking;
    ranking.target_id = target_id;
    ranking.method = method == SimilarityMethod::Helm ? "helm" : "mmd";
    for (const auto& cand : candidates) {
        double distance = 0.0;
        if (method == SimilarityMethod::Helm) {
            if (!target_ensemble) throw std::invalid_argument("rank_candidates: missing target ensemble");
            distance = helm_distance(*target_ensemble, cand.helm_view);
        } else {
            if (!target_mmd_view || !cand.mmd_view)
                throw std::invalid_argument("rank_candidates: missing MMD views");
            distance = mmd_chunked(*target_mmd_view, *cand.mmd_view, bank);
        }
        ranking.candidates.emplace_back(cand.unit_id, distance);
    }
    std::sort(ranking.candidates.begin(), ranking.candidates.end(),
              [](const auto& a, const auto& b) {
                  if (a.second != b.second) return a.second < b.second;
                  return a.first < b.first;
              });
    return ranking;
}

SimilarityRanking rank_sources(const UnitSeries& target, const std::vector<UnitSeries>& fleet,
                               SimilarityMethod method, const HelmHyper& hyper, std::uint64_t seed,
                               const KernelBank& bank) {
    if (fleet.empty()) throw std::invalid_argument("rank_sources: empty fleet");

    UnitSeries target_clean = clean(target);
    SplitSpec spec = split(target_clean, kTwoMonths);
    Normalizer target_norm = fit_normalizer(target_clean, spec.train_begin, spec.train_end);
    UnitSeries target_train = target_clean.slice(spec.train_begin, spec.train_end);

    HelmEnsemble ensemble;
    UnitSeries target_view;
    if (method == SimilarityMethod::Helm) {
        UnitSeries filtered = normalize_and_filter_train(target_train, target_norm);
        ensemble = train_helm_ensemble(filtered.values, hyper, seed);
    } else {
        target_view = normalize(target_train, target_norm);
    }

    std::vector<UnitSeries> mmd_views;
    mmd_views.reserve(fleet.size());
    std::vector<RankCandidate> candidates;
    for (const auto& unit : fleet) {
        UnitSeries cand_clean = clean(unit);
        RankCandidate cand;
        cand.unit_id = unit.unit_id;
        if (method == SimilarityMethod::Helm) {
            cand.helm_view = target_norm.apply(cand_clean.values);
        } else {
            // candidate normalized in its own space, anchored on its early life
            Normalizer own =
                fit_normalizer(cand_clean, cand_clean.start(), cand_clean.start() + kTwoMonths);
            mmd_views.push_back(normalize(cand_clean, own));
        }
        candidates.push_back(std::move(cand));
    }
    for (std::size_t i = 0; i < mmd_views.size(); ++i) candidates[i].mmd_view = &mmd_views[i];

    return rank_candidates(target.unit_id, method,
                           method == SimilarityMethod::Helm ? &ensemble : nullptr,
                           method == SimilarityMethod::Mmd ? &target_view : nullptr, candidates, bank);
}

void write_ranking_csv(const std::vector<SimilarityRanking>& rankings, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "target_id,candidate_id,method,distance,rank\n";
    char buf[32];
    for (const auto& ranking : rankings) {
        int rank = 1;
        for (const auto& [unit_id, distance] : ranking.candidates) {
            std::snprintf(buf, sizeof(buf), "%.17g", distance);
            out << ranking.target_id << ',' << unit_id << ',' << ranking.method << ',' << buf << ','
                << rank++ << '\n';
        }
    }
}

}  // namespace fleetmon
