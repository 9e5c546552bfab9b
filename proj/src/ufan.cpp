#include "fleetmon/ufan.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace fleetmon {

namespace {

constexpr double kProbClamp = 1e-7;
constexpr std::uint64_t kEncoderStream = 10;
constexpr std::uint64_t kDiscriminatorStream = 11;
constexpr std::uint64_t kShuffleStream = 12;

double apply_activation(double z, Activation act) {
    switch (act) {
        case Activation::Tanh: return std::tanh(z);
        case Activation::Logistic: return 1.0 / (1.0 + std::exp(-z));
        case Activation::Identity: return z;
    }
    return z;
}

// derivative expressed through the post-activation value
double activation_derivative(double out, Activation act) {
    switch (act) {
        case Activation::Tanh: return 1.0 - out * out;
        case Activation::Logistic: return out * (1.0 - out);
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

// Symmetric matrix of pairwise row distances.
Matrix pairwise_distances(const Matrix& X) {
    Vector sq = X.rowwise().squaredNorm();
    Matrix d2 = (-2.0 * X * X.transpose());
    d2.colwise() += sq;
    d2.rowwise() += sq.transpose();
    return d2.cwiseMax(0.0).cwiseSqrt();
}

struct DomainPairs {
    Matrix dX;      // pairwise input distances
    Matrix dF;      // pairwise feature distances
    double weight;  // 1 / pair count
};

DomainPairs make_domain_pairs(const Matrix& X, const Matrix& F) {
    if (X.rows() < 2) throw std::invalid_argument("homothety loss needs at least 2 rows per domain");
    DomainPairs p;
    p.dX = pairwise_distances(X);
    p.dF = pairwise_distances(F);
    p.weight = 2.0 / (static_cast<double>(X.rows()) * static_cast<double>(X.rows() - 1));
    return p;
}

// eta over both domains jointly; sums run over the full symmetric matrices,
// which double-counts every pair identically in numerator and denominator.
double joint_eta(const std::vector<DomainPairs>& domains, HomothetyReading reading) {
    if (reading == HomothetyReading::Squared) {
        double num = 0.0, den = 0.0;
        for (const auto& d : domains) {
            num += d.weight * (d.dX.array() * d.dF.array()).sum();
            den += d.weight * d.dF.array().square().sum();
        }
        if (!(den > 0.0)) throw std::runtime_error("homothety: feature collapse (all pairwise feature distances are zero)");
        return num / den;
    }
    // absolute reading: weighted median over all pairs of both domains
    std::vector<double> dx, df, w;
    for (const auto& d : domains) {
        const Eigen::Index n = d.dX.rows();
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j) {
                dx.push_back(d.dX(i, j));
                df.push_back(d.dF(i, j));
                w.push_back(d.weight);
            }
    }
    Eigen::Map<Vector> vx(dx.data(), static_cast<Eigen::Index>(dx.size()));
    Eigen::Map<Vector> vf(df.data(), static_cast<Eigen::Index>(df.size()));
    Eigen::Map<Vector> vw(w.data(), static_cast<Eigen::Index>(w.size()));
    return optimal_eta_absolute(vx, vf, vw);
}

double domain_loss(const DomainPairs& d, double eta, HomothetyReading reading) {
    Matrix r = d.dX - eta * d.dF;
    r.diagonal().setZero();
    if (reading == HomothetyReading::Squared) return 0.5 * d.weight * r.array().square().sum();
    return 0.5 * d.weight * r.array().abs().sum();
}

// dL_S/dF as (diag(C 1) - C) F with the symmetric pair-coefficient matrix C.
Matrix domain_feature_gradient(const DomainPairs& d, const Matrix& F, double eta,
                               HomothetyReading reading) {
    const Eigen::Index n = d.dX.rows();
    Matrix coeff(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        coeff(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double df = d.dF(i, j);
            double c = 0.0;
            if (df > 0.0) {
                double r = d.dX(i, j) - eta * d.dF(i, j);
                if (reading == HomothetyReading::Squared)
                    c = -2.0 * d.weight * eta * r / df;
                else
                    c = -d.weight * eta * (r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0)) / df;
            }
            coeff(i, j) = c;
            coeff(j, i) = c;
        }
    }
    Vector rowsum = coeff.rowwise().sum();
    return rowsum.asDiagonal() * F - coeff * F;
}

nlohmann::json net_to_json(const DenseNet& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : net.layers) {
        nlohmann::json j;
        nlohmann::json w = nlohmann::json::array();
        for (Eigen::Index i = 0; i < layer.W.rows(); ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index k = 0; k < layer.W.cols(); ++k) row.push_back(layer.W(i, k));
            w.push_back(std::move(row));
        }
        j["W"] = std::move(w);
        j["b"] = std::vector<double>(layer.b.data(), layer.b.data() + layer.b.size());
        j["act"] = static_cast<int>(layer.act);
        layers.push_back(std::move(j));
    }
    return layers;
}

DenseNet net_from_json(const nlohmann::json& j) {
    DenseNet net;
    for (const auto& lj : j) {
        DenseLayer layer;
        const auto& w = lj.at("W");
        const auto rows = static_cast<Eigen::Index>(w.size());
        const auto cols = static_cast<Eigen::Index>(w[0].size());
        layer.W.resize(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index k = 0; k < cols; ++k)
                layer.W(i, k) = w[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
        auto b = lj.at("b").get<std::vector<double>>();
        layer.b = Eigen::Map<Vector>(b.data(), static_cast<Eigen::Index>(b.size()));
        layer.act = static_cast<Activation>(lj.at("act").get<int>());
        net.layers.push_back(std::move(layer));
    }
    return net;
}

}  // namespace

void DenseNet::Grads::init_like(const DenseNet& net) {
    dW.clear();
    db.clear();
    for (const auto& layer : net.layers) {
        dW.push_back(Matrix::Zero(layer.W.rows(), layer.W.cols()));
        db.push_back(Vector::Zero(layer.b.size()));
    }
}

void DenseNet::Grads::accumulate(const Grads& other) {
    for (std::size_t l = 0; l < dW.size(); ++l) {
        dW[l] += other.dW[l];
        db[l] += other.db[l];
    }
}

void DenseNet::Grads::scale(double factor) {
    for (std::size_t l = 0; l < dW.size(); ++l) {
        dW[l] *= factor;
        db[l] *= factor;
    }
}

Matrix DenseNet::forward(const Matrix& X) const {
    Cache scratch;
    return forward(X, scratch);
}

Matrix DenseNet::forward(const Matrix& X, Cache& cache) const {
    if (X.cols() != in_dim()) throw std::invalid_argument("dense net: input dimension mismatch");
    cache.inputs.clear();
    cache.outputs.clear();
    Matrix cur = X;
    for (const auto& layer : layers) {
        cache.inputs.push_back(cur);
        Matrix pre = cur.lazyProduct(layer.W);
        pre.rowwise() += layer.b.transpose();
        Activation act = layer.act;
        cur = pre.unaryExpr([act](double z) { return apply_activation(z, act); });
        cache.outputs.push_back(cur);
    }
    return cur;
}

Matrix DenseNet::backward(const Cache& cache, const Matrix& d_out, Grads& grads) const {
    Matrix delta = d_out;
    for (int l = static_cast<int>(layers.size()) - 1; l >= 0; --l) {
        const auto& layer = layers[static_cast<std::size_t>(l)];
        const Matrix& out = cache.outputs[static_cast<std::size_t>(l)];
        Activation act = layer.act;
        Matrix d_pre =
            delta.array() * out.unaryExpr([act](double o) { return activation_derivative(o, act); }).array();
        grads.dW[static_cast<std::size_t>(l)] += cache.inputs[static_cast<std::size_t>(l)].transpose() * d_pre;
        grads.db[static_cast<std::size_t>(l)] += d_pre.colwise().sum();
        delta = d_pre * layer.W.transpose();
    }
    return delta;
}

void DenseNet::sgd_step(const Grads& grads, double learning_rate) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
        layers[l].W -= learning_rate * grads.dW[l];
        layers[l].b -= learning_rate * grads.db[l];
    }
}

DenseNet make_dense_net(const std::vector<Eigen::Index>& dims, const std::vector<Activation>& acts,
                        std::uint64_t seed) {
    if (dims.size() < 2 || acts.size() != dims.size() - 1)
        throw std::invalid_argument("make_dense_net: dims/activations mismatch");
    DenseNet net;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        DenseLayer layer;
        double bound = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
        layer.W.resize(dims[l], dims[l + 1]);
        for (Eigen::Index i = 0; i < layer.W.rows(); ++i)
            for (Eigen::Index j = 0; j < layer.W.cols(); ++j) layer.W(i, j) = rng.uniform(-bound, bound);
        layer.b = Vector::Zero(dims[l + 1]);
        layer.act = acts[l];
        net.layers.push_back(std::move(layer));
    }
    return net;
}

DenseNet make_encoder(Eigen::Index in_dim, std::uint64_t seed) {
    return make_dense_net({in_dim, 15, 10}, {Activation::Tanh, Activation::Tanh}, seed);
}

DenseNet make_discriminator(std::uint64_t seed) {
    return make_dense_net({10, 10, 5, 1}, {Activation::Tanh, Activation::Tanh, Activation::Logistic},
                          seed);
}

Matrix encode(const UfanModel& model, const Matrix& X) { return model.encoder.forward(X); }

Vector discriminate(const UfanModel& model, const Matrix& F) {
    return model.discriminator.forward(F).col(0);
}

double optimal_eta(const Vector& dX, const Vector& dF, const Vector& weights) {
    if (dX.size() != dF.size() || dX.size() != weights.size())
        throw std::invalid_argument("optimal_eta: length mismatch");
    double den = (weights.array() * dF.array().square()).sum();
    if (!(den > 0.0))
        throw std::runtime_error("optimal_eta: feature collapse (all pairwise feature distances are zero)");
    return (weights.array() * dX.array() * dF.array()).sum() / den;
}

double optimal_eta_absolute(const Vector& dX, const Vector& dF, const Vector& weights) {
    if (dX.size() != dF.size() || dX.size() != weights.size())
        throw std::invalid_argument("optimal_eta_absolute: length mismatch");
    // sum_i w_i |dX_i - eta dF_i| = sum_i (w_i dF_i) |dX_i/dF_i - eta|
    struct Item {
        double ratio;
        double weight;
    };
    std::vector<Item> items;
    double total = 0.0;
    for (Eigen::Index i = 0; i < dX.size(); ++i) {
        if (dF[i] > 0.0) {
            items.push_back({dX[i] / dF[i], weights[i] * dF[i]});
            total += weights[i] * dF[i];
        }
    }
    if (items.empty() || !(total > 0.0))
        throw std::runtime_error("optimal_eta_absolute: feature collapse (all pairwise feature distances are zero)");
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.ratio < b.ratio; });
    double acc = 0.0;
    for (const auto& item : items) {
        acc += item.weight;
        if (acc >= 0.5 * total) return item.ratio;
    }
    return items.back().ratio;
}

HomothetyResult homothety_loss(const Matrix& X_src, const Matrix& F_src, const Matrix& X_tgt,
                               const Matrix& F_tgt, HomothetyReading reading) {
    if (X_src.rows() != F_src.rows() || X_tgt.rows() != F_tgt.rows())
        throw std::invalid_argument("homothety_loss: batch/feature row mismatch");
    std::vector<DomainPairs> domains;
    domains.push_back(make_domain_pairs(X_src, F_src));
    domains.push_back(make_domain_pairs(X_tgt, F_tgt));

    HomothetyResult result;
    result.eta = joint_eta(domains, reading);
    for (const auto& d : domains) result.l_f += domain_loss(d, result.eta, reading);
    return result;
}

double bce_loss(const Vector& probs, const Vector& labels) {
    if (probs.size() != labels.size()) throw std::invalid_argument("bce_loss: length mismatch");
    if (probs.size() == 0) throw std::invalid_argument("bce_loss: empty input");
    double total = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        double p = std::clamp(probs[i], kProbClamp, 1.0 - kProbClamp);
        total += -(labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p));
    }
    return total / static_cast<double>(probs.size());
}

BatchGradients ufan_batch_gradients(const UfanModel& model, const Matrix& X_src, const Matrix& X_tgt) {
    const Eigen::Index ns = X_src.rows();
    const Eigen::Index nt = X_tgt.rows();
    if (ns < 2 || nt < 2) throw std::invalid_argument("ufan batch needs at least 2 rows per domain");

    BatchGradients out;
    out.encoder.init_like(model.encoder);
    out.discriminator.init_like(model.discriminator);

    // one encoder pass over both domains
    Matrix X_cat(ns + nt, X_src.cols());
    X_cat.topRows(ns) = X_src;
    X_cat.bottomRows(nt) = X_tgt;
    DenseNet::Cache enc_cache;
    Matrix F_cat = model.encoder.forward(X_cat, enc_cache);
    Matrix F_src = F_cat.topRows(ns);
    Matrix F_tgt = F_cat.bottomRows(nt);

    // homothety side
    std::vector<DomainPairs> domains;
    domains.push_back(make_domain_pairs(X_src, F_src));
    domains.push_back(make_domain_pairs(X_tgt, F_tgt));
    out.eta = joint_eta(domains, model.config.reading);
    out.l_f = domain_loss(domains[0], out.eta, model.config.reading) +
              domain_loss(domains[1], out.eta, model.config.reading);
    // eta is re-solved per batch and held constant in the gradient
    Matrix dF(ns + nt, F_cat.cols());
    dF.topRows(ns) = domain_feature_gradient(domains[0], F_src, out.eta, model.config.reading);
    dF.bottomRows(nt) = domain_feature_gradient(domains[1], F_tgt, out.eta, model.config.reading);

    // discriminator side: label 1 = source, 0 = target
    DenseNet::Cache disc_cache;
    Vector probs = model.discriminator.forward(F_cat, disc_cache).col(0);
    Vector labels(ns + nt);
    labels.head(ns).setOnes();
    labels.tail(nt).setZero();
    out.l_d = bce_loss(probs, labels);

    Matrix d_probs(ns + nt, 1);
    const double inv_n = 1.0 / static_cast<double>(ns + nt);
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        double p = probs[i];
        if (p <= kProbClamp || p >= 1.0 - kProbClamp) {
            d_probs(i, 0) = 0.0;  // clamped: flat region of the loss
        } else {
            d_probs(i, 0) = (-labels[i] / p + (1.0 - labels[i]) / (1.0 - p)) * inv_n;
        }
    }
    Matrix dLd_dF = model.discriminator.backward(disc_cache, d_probs, out.discriminator);

    // gradient reversal: the encoder descends L_F and ascends alpha * L_D
    Matrix d_encoder_out = dF - model.alpha * dLd_dF;
    model.encoder.backward(enc_cache, d_encoder_out, out.encoder);
    return out;
}

UfanModel train_ufan(const Matrix& source, const Matrix& target_train, const TrainConfig& cfg) {
    if (source.rows() == 0 || target_train.rows() == 0)
        throw std::invalid_argument("train_ufan: empty domain");
    if (source.cols() != target_train.cols())
        throw std::invalid_argument("train_ufan: domains have different signal counts");
    if (cfg.batch_size < 2 || cfg.epochs < 1 || cfg.learning_rate <= 0.0)
        throw std::invalid_argument("train_ufan: invalid config");

    const Eigen::Index ns = source.rows();
    const Eigen::Index nt = target_train.rows();
    const Eigen::Index batch = std::min({cfg.batch_size, ns, nt});
    if (batch < 2) throw std::invalid_argument("train_ufan: domains need at least 2 rows");
    const Eigen::Index steps = std::max<Eigen::Index>(1, std::min(ns, nt) / batch);

    UfanModel model;
    model.config = cfg;
    model.alpha = cfg.alpha;
    model.encoder = make_encoder(source.cols(), derive_seed(cfg.seed, kEncoderStream));
    model.discriminator = make_discriminator(derive_seed(cfg.seed, kDiscriminatorStream));

    Rng shuffle_rng(derive_seed(cfg.seed, kShuffleStream));
    std::vector<Eigen::Index> src_order(static_cast<std::size_t>(ns));
    std::vector<Eigen::Index> tgt_order(static_cast<std::size_t>(nt));
    std::iota(src_order.begin(), src_order.end(), 0);
    std::iota(tgt_order.begin(), tgt_order.end(), 0);

    Matrix xs(batch, source.cols());
    Matrix xt(batch, source.cols());
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(src_order);
        shuffle_rng.shuffle(tgt_order);
        EpochStats stats;
        for (Eigen::Index step = 0; step < steps; ++step) {
            for (Eigen::Index i = 0; i < batch; ++i) {
                xs.row(i) = source.row(src_order[static_cast<std::size_t>(step * batch + i)]);
                xt.row(i) = target_train.row(tgt_order[static_cast<std::size_t>(step * batch + i)]);
            }
            BatchGradients grads = ufan_batch_gradients(model, xs, xt);
            if (!std::isfinite(grads.l_f) || !std::isfinite(grads.l_d))
                throw std::runtime_error("train_ufan: diverged at epoch " + std::to_string(epoch) +
                                         " (L_F=" + std::to_string(grads.l_f) +
                                         ", L_D=" + std::to_string(grads.l_d) + ")");
            model.encoder.sgd_step(grads.encoder, cfg.learning_rate);
            model.discriminator.sgd_step(grads.discriminator, cfg.learning_rate);
            stats.l_f += grads.l_f;
            stats.l_d += grads.l_d;
            stats.eta += grads.eta;
        }
        stats.l_f /= static_cast<double>(steps);
        stats.l_d /= static_cast<double>(steps);
        stats.eta /= static_cast<double>(steps);
        stats.adversarial = stats.l_f - cfg.alpha * stats.l_d;
        model.history.push_back(stats);
    }
    model.eta = model.history.back().eta;
    return model;
}

double adversarial_score(const UfanModel& model) {
    if (model.history.empty()) throw std::runtime_error("adversarial_score: model not trained");
    return model.history.back().adversarial;
}

void save_ufan(const UfanModel& model, const std::string& path) {
    nlohmann::json doc;
    doc["encoder"] = net_to_json(model.encoder);
    doc["discriminator"] = net_to_json(model.discriminator);
    doc["alpha"] = model.alpha;
    doc["eta"] = model.eta;
    doc["config"] = {{"batch_size", model.config.batch_size},
                     {"epochs", model.config.epochs},
                     {"learning_rate", model.config.learning_rate},
                     {"alpha", model.config.alpha},
                     {"seed", model.config.seed},
                     {"reading", model.config.reading == HomothetyReading::Squared ? "squared" : "absolute"}};
    doc["history"] = nlohmann::json::array();
    for (const auto& s : model.history)
        doc["history"].push_back({{"l_f", s.l_f}, {"l_d", s.l_d}, {"adversarial", s.adversarial}, {"eta", s.eta}});
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << doc.dump() << '\n';
}

UfanModel load_ufan(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    nlohmann::json doc = nlohmann::json::parse(in);

    UfanModel model;
    model.encoder = net_from_json(doc.at("encoder"));
    model.discriminator = net_from_json(doc.at("discriminator"));
    model.alpha = doc.at("alpha").get<double>();
    model.eta = doc.at("eta").get<double>();
    const auto& c = doc.at("config");
    model.config.batch_size = c.at("batch_size").get<Eigen::Index>();
    model.config.epochs = c.at("epochs").get<int>();
    model.config.learning_rate = c.at("learning_rate").get<double>();
    model.config.alpha = c.at("alpha").get<double>();
    model.config.seed = c.at("seed").get<std::uint64_t>();
    model.config.reading = c.at("reading").get<std::string>() == "squared" ? HomothetyReading::Squared
                                                                           : HomothetyReading::Absolute;
    for (const auto& s : doc.at("history")) {
        EpochStats stats;
        stats.l_f = s.at("l_f").get<double>();
        stats.l_d = s.at("l_d").get<double>();
        stats.adversarial = s.at("adversarial").get<double>();
        stats.eta = s.at("eta").get<double>();
        model.history.push_back(stats);
    }
    return model;
}

void write_training_curve_csv(const UfanModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "epoch,L_F,L_D,adversarial\n";
    char buf[96];
    for (std::size_t e = 0; e < model.history.size(); ++e) {
        const auto& s = model.history[e];
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", e + 1, s.l_f, s.l_d, s.adversarial);
        out << buf;
    }
}

}  // namespace fleetmon
