#include "fleetmon/helm.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <stdexcept>

namespace fleetmon {

namespace {

// Seed streams within one HELM model.
constexpr std::uint64_t kAutoencoderStream = 0;
constexpr std::uint64_t kOccStream = 1;

nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
    const auto n = static_cast<Eigen::Index>(j.size());
    if (n == 0) return Matrix(0, 0);
    const auto d = static_cast<Eigen::Index>(j[0].size());
    Matrix m(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < d; ++k) m(i, k) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
    return m;
}

nlohmann::json layer_to_json(const RandomLayer& layer) {
    nlohmann::json j;
    j["seed"] = layer.seed;
    j["weights"] = matrix_to_json(layer.weights);
    j["biases"] = std::vector<double>(layer.biases.data(), layer.biases.data() + layer.biases.size());
    return j;
}

RandomLayer layer_from_json(const nlohmann::json& j) {
    RandomLayer layer;
    layer.seed = j.at("seed").get<std::uint64_t>();
    layer.weights = matrix_from_json(j.at("weights"));
    auto b = j.at("biases").get<std::vector<double>>();
    layer.biases = Eigen::Map<Vector>(b.data(), static_cast<Eigen::Index>(b.size()));
    return layer;
}

}  // namespace

Vector OneClassElm::scores(const Matrix& F) const {
    Matrix H = hidden(layer, F);
    Vector y = H.lazyProduct(beta.beta).col(0);
    return (1.0 - y.array()).abs();
}

AutoencoderElm train_autoencoder(const Matrix& X_train, Eigen::Index n_features, double lambda,
                                 std::uint64_t seed, int max_iters, double tol) {
    if (X_train.rows() < 2) throw std::invalid_argument("train_autoencoder: need at least 2 rows");
    if (n_features >= X_train.cols())
        throw std::invalid_argument("train_autoencoder: autoencoder must be compressive");

    AutoencoderElm ae;
    ae.layer = make_random_layer(seed, X_train.cols(), n_features);
    Matrix H = hidden(ae.layer, X_train);
    LassoResult solved = solve_lasso_fista(H, X_train, lambda, max_iters, tol);
    ae.beta = solved.weights;
    ae.fista_converged = solved.converged;
    return ae;
}

Matrix reconstruction_residuals(const AutoencoderElm& ae, const Matrix& X) {
    return hidden(ae.layer, X).lazyProduct(ae.beta.beta) - X;
}

OneClassElm train_occ(const Matrix& F_train, double C, Eigen::Index n_neurons, std::uint64_t seed,
                      double gamma, double p) {
    if (F_train.rows() < 10) throw std::invalid_argument("train_occ: need at least 10 rows");
    if (gamma < 1.0 || gamma > 2.0) throw std::invalid_argument("train_occ: gamma outside [1,2]");
    if (p < 95.0 || p > 100.0) throw std::invalid_argument("train_occ: p outside [95,100]");

    OneClassElm occ;
    occ.layer = make_random_layer(seed, F_train.cols(), n_neurons);
    Matrix H = hidden(occ.layer, F_train);
    occ.beta = solve_ridge(H, Matrix::Ones(F_train.rows(), 1), C);
    Vector s = occ.scores(F_train);
    occ.threshold = gamma * percentile(s, p);
    if (!(occ.threshold > 0.0)) throw std::runtime_error("train_occ: degenerate (zero) threshold");
    return occ;
}

Vector magnification(const OneClassElm& occ, const Matrix& F) {
    if (occ.threshold <= 0.0) throw std::runtime_error("magnification: classifier not trained");
    return occ.scores(F) / occ.threshold;
}

HelmModel train_helm_model(const Matrix& X_train, const HelmHyper& hyper, std::uint64_t seed) {
    HelmModel model;
    model.seed = seed;
    model.ae = train_autoencoder(X_train, hyper.n_features, hyper.lasso_lambda,
                                 derive_seed(seed, kAutoencoderStream), hyper.fista_max_iters,
                                 hyper.fista_tol);
    Matrix F = model.ae.features(X_train);
    model.occ = train_occ(F, hyper.ridge_c, hyper.occ_neurons, derive_seed(seed, kOccStream),
                          hyper.gamma, hyper.percentile_p);
    return model;
}

HelmEnsemble train_helm_ensemble(const Matrix& X_train, const HelmHyper& hyper, std::uint64_t base_seed) {
    if (hyper.n_models < 1) throw std::invalid_argument("train_helm_ensemble: need at least one model");
    HelmEnsemble ens;
    ens.hyper = hyper;
    ens.base_seed = base_seed;
    ens.models.reserve(static_cast<std::size_t>(hyper.n_models));
    for (int k = 0; k < hyper.n_models; ++k)
        ens.models.push_back(train_helm_model(X_train, hyper, base_seed + static_cast<std::uint64_t>(k)));
    return ens;
}

Vector ensemble_score(const HelmEnsemble& ens, const Matrix& X) {
    if (ens.models.empty()) throw std::runtime_error("ensemble_score: empty ensemble");
    Vector total = Vector::Zero(X.rows());
    for (const auto& model : ens.models)
        total += magnification(model.occ, model.ae.features(X));
    return total / static_cast<double>(ens.models.size());
}

OccEnsemble train_occ_ensemble(const Matrix& F_train, const HelmHyper& hyper, std::uint64_t base_seed) {
    if (hyper.n_models < 1) throw std::invalid_argument("train_occ_ensemble: need at least one model");
    OccEnsemble ens;
    ens.base_seed = base_seed;
    ens.models.reserve(static_cast<std::size_t>(hyper.n_models));
    for (int k = 0; k < hyper.n_models; ++k) {
        std::uint64_t seed = derive_seed(base_seed + static_cast<std::uint64_t>(k), kOccStream);
        ens.models.push_back(
            train_occ(F_train, hyper.ridge_c, hyper.occ_neurons, seed, hyper.gamma, hyper.percentile_p));
    }
    return ens;
}

Vector occ_ensemble_score(const OccEnsemble& ens, const Matrix& F) {
    if (ens.models.empty()) throw std::runtime_error("occ_ensemble_score: empty ensemble");
    Vector total = Vector::Zero(F.rows());
    for (const auto& occ : ens.models) total += magnification(occ, F);
    return total / static_cast<double>(ens.models.size());
}

void save_helm_ensemble(const HelmEnsemble& ens, const std::string& path) {
    nlohmann::json doc;
    doc["base_seed"] = ens.base_seed;
    doc["hyper"] = {{"n_features", ens.hyper.n_features},
                    {"lasso_lambda", ens.hyper.lasso_lambda},
                    {"occ_neurons", ens.hyper.occ_neurons},
                    {"ridge_c", ens.hyper.ridge_c},
                    {"percentile_p", ens.hyper.percentile_p},
                    {"gamma", ens.hyper.gamma},
                    {"n_models", ens.hyper.n_models},
                    {"fista_max_iters", ens.hyper.fista_max_iters},
                    {"fista_tol", ens.hyper.fista_tol}};
    doc["models"] = nlohmann::json::array();
    for (const auto& model : ens.models) {
        nlohmann::json j;
        j["seed"] = model.seed;
        j["ae_layer"] = layer_to_json(model.ae.layer);
        j["ae_beta"] = matrix_to_json(model.ae.beta.beta);
        j["ae_converged"] = model.ae.fista_converged;
        j["occ_layer"] = layer_to_json(model.occ.layer);
        j["occ_beta"] = matrix_to_json(model.occ.beta.beta);
        j["threshold"] = model.occ.threshold;
        doc["models"].push_back(std::move(j));
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << doc.dump() << '\n';
}

HelmEnsemble load_helm_ensemble(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    nlohmann::json doc = nlohmann::json::parse(in);

    HelmEnsemble ens;
    ens.base_seed = doc.at("base_seed").get<std::uint64_t>();
    const auto& h = doc.at("hyper");
    ens.hyper.n_features = h.at("n_features").get<Eigen::Index>();
    ens.hyper.lasso_lambda = h.at("lasso_lambda").get<double>();
    ens.hyper.occ_neurons = h.at("occ_neurons").get<Eigen::Index>();
    ens.hyper.ridge_c = h.at("ridge_c").get<double>();
    ens.hyper.percentile_p = h.at("percentile_p").get<double>();
    ens.hyper.gamma = h.at("gamma").get<double>();
    ens.hyper.n_models = h.at("n_models").get<int>();
    ens.hyper.fista_max_iters = h.at("fista_max_iters").get<int>();
    ens.hyper.fista_tol = h.at("fista_tol").get<double>();

    for (const auto& j : doc.at("models")) {
        HelmModel model;
        model.seed = j.at("seed").get<std::uint64_t>();
        model.ae.layer = layer_from_json(j.at("ae_layer"));
        model.ae.beta.beta = matrix_from_json(j.at("ae_beta"));
        model.ae.fista_converged = j.at("ae_converged").get<bool>();
        model.occ.layer = layer_from_json(j.at("occ_layer"));
        model.occ.beta.beta = matrix_from_json(j.at("occ_beta"));
        model.occ.threshold = j.at("threshold").get<double>();
        ens.models.push_back(std::move(model));
    }
    return ens;
}

}  // namespace fleetmon
