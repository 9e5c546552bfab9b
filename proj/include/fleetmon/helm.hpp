#pragma once

#include "fleetmon/elm.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fleetmon {

struct HelmHyper {
    Eigen::Index n_features = 10;
    double lasso_lambda = 1e-3;
    Eigen::Index occ_neurons = 200;
    double ridge_c = 1e-5;
    double percentile_p = 99.5;
    double gamma = 1.2;
    int n_models = 8;
    int fista_max_iters = 5000;
    double fista_tol = 1e-8;
};

// Compressive sparse autoencoder: random hidden layer, output weights from
// the L1-regularized reconstruction solve. The hidden activations are the
// learned features.
struct AutoencoderElm {
    RandomLayer layer;    // in_dim x n_features
    OutputWeights beta;   // n_features x in_dim
    bool fista_converged = true;

    Matrix features(const Matrix& X) const { return hidden(layer, X); }
};

// One-class classifier: ridge ELM regressed onto a target of ones. Scores
// are |1 - y|; the decision threshold is gamma * percentile_p of the
// training scores.
struct OneClassElm {
    RandomLayer layer;   // feature_dim x occ_neurons
    OutputWeights beta;  // occ_neurons x 1
    double threshold = 0.0;

    Vector scores(const Matrix& F) const;
};

struct HelmModel {
    AutoencoderElm ae;
    OneClassElm occ;
    std::uint64_t seed = 0;
};

struct HelmEnsemble {
    std::vector<HelmModel> models;
    HelmHyper hyper;
    std::uint64_t base_seed = 0;
};

// One-class stage alone, for pipelines that bring their own feature encoder.
struct OccEnsemble {
    std::vector<OneClassElm> models;
    std::uint64_t base_seed = 0;
};

AutoencoderElm train_autoencoder(const Matrix& X_train, Eigen::Index n_features, double lambda,
                                 std::uint64_t seed, int max_iters = 5000, double tol = 1e-8);

Matrix reconstruction_residuals(const AutoencoderElm& ae, const Matrix& X);

OneClassElm train_occ(const Matrix& F_train, double C, Eigen::Index n_neurons, std::uint64_t seed,
                      double gamma, double p);

// Anomaly severity normalized by the decision threshold; a point is flagged
// abnormal iff its magnification exceeds 1.
Vector magnification(const OneClassElm& occ, const Matrix& F);

HelmModel train_helm_model(const Matrix& X_train, const HelmHyper& hyper, std::uint64_t seed);
HelmEnsemble train_helm_ensemble(const Matrix& X_train, const HelmHyper& hyper, std::uint64_t base_seed);

// Mean per-model magnification per row.
Vector ensemble_score(const HelmEnsemble& ens, const Matrix& X);

OccEnsemble train_occ_ensemble(const Matrix& F_train, const HelmHyper& hyper, std::uint64_t base_seed);
Vector occ_ensemble_score(const OccEnsemble& ens, const Matrix& F);

void save_helm_ensemble(const HelmEnsemble& ens, const std::string& path);
HelmEnsemble load_helm_ensemble(const std::string& path);

}  // namespace fleetmon
