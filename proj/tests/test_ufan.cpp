#include <doctest.h>

#include "fleetmon/ufan.hpp"

#include <Eigen/QR>
#include <cmath>
#include <filesystem>

using namespace fleetmon;

namespace {

Matrix random_rows(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
    return m;
}

// brute-force pair oracle, independent of the library's matrix formulation
struct PairSet {
    std::vector<double> dx, df;
    double weight;
};

PairSet enumerate_pairs(const Matrix& X, const Matrix& F) {
    PairSet p;
    const Eigen::Index n = X.rows();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            p.dx.push_back((X.row(i) - X.row(j)).norm());
            p.df.push_back((F.row(i) - F.row(j)).norm());
        }
    p.weight = 1.0 / static_cast<double>(p.dx.size());
    return p;
}

double oracle_loss(const std::vector<PairSet>& domains, double eta) {
    double total = 0.0;
    for (const auto& d : domains) {
        double sum = 0.0;
        for (std::size_t k = 0; k < d.dx.size(); ++k) {
            double r = d.dx[k] - eta * d.df[k];
            sum += r * r;
        }
        total += d.weight * sum;
    }
    return total;
}

double oracle_eta(const std::vector<PairSet>& domains) {
    double num = 0.0, den = 0.0;
    for (const auto& d : domains)
        for (std::size_t k = 0; k < d.dx.size(); ++k) {
            num += d.weight * d.dx[k] * d.df[k];
            den += d.weight * d.df[k] * d.df[k];
        }
    return num / den;
}

std::vector<double*> all_params(DenseNet& net) {
    std::vector<double*> out;
    for (auto& layer : net.layers) {
        for (Eigen::Index i = 0; i < layer.W.size(); ++i) out.push_back(layer.W.data() + i);
        for (Eigen::Index i = 0; i < layer.b.size(); ++i) out.push_back(layer.b.data() + i);
    }
    return out;
}

std::vector<double> flat_grads(const DenseNet::Grads& grads) {
    std::vector<double> out;
    for (std::size_t l = 0; l < grads.dW.size(); ++l) {
        for (Eigen::Index i = 0; i < grads.dW[l].size(); ++i) out.push_back(*(grads.dW[l].data() + i));
        for (Eigen::Index i = 0; i < grads.db[l].size(); ++i) out.push_back(grads.db[l][i]);
    }
    return out;
}

}  // namespace

TEST_CASE("encoder forward pass: zero net, shapes, scalar oracle") {
    UfanModel model;
    model.encoder = make_encoder(3, 1);
    for (auto& layer : model.encoder.layers) {
        layer.W.setZero();
        layer.b.setZero();
    }
    Matrix F = encode(model, random_rows(5, 3, 2));
    CHECK(F.rows() == 5);
    CHECK(F.cols() == 10);
    CHECK((F.array() == 0.0).all());  // tanh(0)

    CHECK(encode(model, random_rows(1, 3, 3)).rows() == 1);
    CHECK_THROWS(encode(model, random_rows(4, 7, 4)));

    // hand-set 2 -> 2 -> 2 toy net against the scalar formula
    DenseNet toy;
    DenseLayer l1, l2;
    l1.W = Matrix(2, 2);
    l1.W << 0.3, -0.5, 0.8, 0.2;
    l1.b = Vector(2);
    l1.b << 0.1, -0.2;
    l1.act = Activation::Tanh;
    l2.W = Matrix(2, 2);
    l2.W << -0.4, 0.6, 0.7, -0.1;
    l2.b = Vector(2);
    l2.b << 0.0, 0.05;
    l2.act = Activation::Tanh;
    toy.layers = {l1, l2};
    Matrix x(1, 2);
    x << 0.9, -1.1;
    double h0 = std::tanh(0.9 * 0.3 + (-1.1) * 0.8 + 0.1);
    double h1 = std::tanh(0.9 * (-0.5) + (-1.1) * 0.2 + (-0.2));
    double o0 = std::tanh(h0 * (-0.4) + h1 * 0.7 + 0.0);
    double o1 = std::tanh(h0 * 0.6 + h1 * (-0.1) + 0.05);
    Matrix out = toy.forward(x);
    CHECK(out(0, 0) == doctest::Approx(o0).epsilon(1e-15));
    CHECK(out(0, 1) == doctest::Approx(o1).epsilon(1e-15));
}

TEST_CASE("discriminator outputs probabilities with the logistic head") {
    UfanModel model;
    model.discriminator = make_discriminator(5);
    for (auto& layer : model.discriminator.layers) {
        layer.W.setZero();
        layer.b.setZero();
    }
    Vector p = discriminate(model, random_rows(7, 10, 6));
    CHECK((p.array() == 0.5).all());  // sigmoid(0)

    model.discriminator = make_discriminator(7);
    Vector q = discriminate(model, random_rows(100, 10, 8));
    CHECK((q.array() > 0.0).all());
    CHECK((q.array() < 1.0).all());

    // one-layer logistic head against the scalar formula
    DenseNet head;
    DenseLayer l;
    l.W = Matrix(2, 1);
    l.W << 0.7, -0.3;
    l.b = Vector(1);
    l.b << 0.2;
    l.act = Activation::Logistic;
    head.layers = {l};
    Matrix f(1, 2);
    f << 0.4, 0.9;
    double z = 0.4 * 0.7 + 0.9 * (-0.3) + 0.2;
    CHECK(head.forward(f)(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-z))).epsilon(1e-15));
}

TEST_CASE("optimal_eta worked examples") {
    Vector w2 = Vector::Ones(2);
    Vector dx(2), df(2);
    dx << 1.0, 2.0;
    df << 1.0, 1.0;
    CHECK(optimal_eta(dx, df, w2) == doctest::Approx(1.5).epsilon(1e-12));

    Vector dx3 = random_rows(5, 1, 9).col(0).cwiseAbs();
    CHECK(optimal_eta(dx3, 2.0 * dx3, Vector::Ones(5)) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(optimal_eta(dx3, dx3, Vector::Ones(5)) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS(optimal_eta(dx, Vector::Zero(2), w2));  // feature collapse
    CHECK_THROWS(optimal_eta(dx, df, Vector::Ones(3)));
}

TEST_CASE("optimal_eta is the global minimizer on random batches") {
    Rng rng(10);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index n = 3 + static_cast<Eigen::Index>(rng.below(40));
        Vector dx(n), df(n), w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            dx[i] = std::abs(rng.normal());
            df[i] = std::abs(rng.normal()) + 1e-3;
            w[i] = rng.uniform(0.1, 2.0);
        }
        double eta = optimal_eta(dx, df, w);
        auto loss = [&](double e) { return (w.array() * (dx.array() - e * df.array()).square()).sum(); };
        CHECK(loss(eta) <= loss(eta * (1 + 1e-3)));
        CHECK(loss(eta) <= loss(eta * (1 - 1e-3)));
    }
}

TEST_CASE("optimal_eta_absolute solves the weighted median problem") {
    Vector dx(3), df(3), w(3);
    dx << 1.0, 2.0, 4.0;
    df << 1.0, 1.0, 1.0;
    w << 1.0, 1.0, 1.0;
    double eta = optimal_eta_absolute(dx, df, w);
    // minimizer of sum |dx_i - eta| is the median
    CHECK(eta == doctest::Approx(2.0));
    auto loss = [&](double e) { return (w.array() * (dx.array() - e * df.array()).abs()).sum(); };
    for (double delta : {-0.5, -0.01, 0.01, 0.5}) CHECK(loss(eta) <= loss(eta + delta) + 1e-12);
}

TEST_CASE("homothety_loss: exact homothety, collapse, brute-force oracle") {
    Matrix xs = random_rows(6, 4, 11);
    Matrix xt = random_rows(5, 4, 12);

    // a global isometry scaled by 3 gives eta = 1/3 and zero loss
    Matrix q_raw = random_rows(4, 4, 13);
    Eigen::HouseholderQR<Matrix> qr(q_raw);
    Matrix Q = qr.householderQ();
    HomothetyResult iso = homothety_loss(xs, 3.0 * xs * Q, xt, 3.0 * xt * Q);
    CHECK(iso.eta == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(iso.l_f <= 1e-20);

    // constant features collapse
    CHECK_THROWS(homothety_loss(xs, Matrix::Ones(6, 2), xt, Matrix::Ones(5, 2)));

    // 3-point toy batches against the brute-force enumeration
    Matrix xs3 = random_rows(3, 2, 14);
    Matrix fs3 = random_rows(3, 2, 15);
    Matrix xt3 = random_rows(3, 2, 16);
    Matrix ft3 = random_rows(3, 2, 17);
    std::vector<PairSet> domains{enumerate_pairs(xs3, fs3), enumerate_pairs(xt3, ft3)};
    double eta_oracle = oracle_eta(domains);
    HomothetyResult r = homothety_loss(xs3, fs3, xt3, ft3);
    CHECK(r.eta == doctest::Approx(eta_oracle).epsilon(1e-12));
    CHECK(r.l_f == doctest::Approx(oracle_loss(domains, eta_oracle)).epsilon(1e-12));

    CHECK_THROWS(homothety_loss(xs.topRows(1), fs3.topRows(1), xt3, ft3));  // 1-row domain
}

TEST_CASE("homothety_loss is invariant under orthogonal feature maps") {
    Matrix xs = random_rows(8, 5, 18);
    Matrix xt = random_rows(7, 5, 19);
    Matrix fs = random_rows(8, 10, 20);
    Matrix ft = random_rows(7, 10, 21);
    Matrix q_raw = random_rows(10, 10, 22);
    Matrix Q = Eigen::HouseholderQR<Matrix>(q_raw).householderQ();

    HomothetyResult base = homothety_loss(xs, fs, xt, ft);
    HomothetyResult rotated = homothety_loss(xs, fs * Q, xt, ft * Q);
    CHECK(rotated.l_f == doctest::Approx(base.l_f).epsilon(1e-9));
    CHECK(rotated.eta == doctest::Approx(base.eta).epsilon(1e-9));
}

TEST_CASE("bce_loss worked values and bounds") {
    Vector half = Vector::Constant(10, 0.5);
    Vector labels(10);
    labels << 1, 0, 1, 1, 0, 0, 1, 0, 1, 0;
    CHECK(bce_loss(half, labels) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    Vector uneven(10);
    uneven.setOnes();
    CHECK(bce_loss(half, uneven) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    Vector p2(2), y2(2);
    p2 << 0.9, 0.2;
    y2 << 1.0, 0.0;
    CHECK(bce_loss(p2, y2) == doctest::Approx(-(std::log(0.9) + std::log(0.8)) / 2.0).epsilon(1e-12));

    CHECK(bce_loss(y2.cwiseMax(1e-7).cwiseMin(1.0 - 1e-7), y2) < 1e-5);  // near-perfect prediction
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        Vector p = Vector::NullaryExpr(8, [&](Eigen::Index) { return rng.uniform(0.01, 0.99); });
        Vector y = Vector::NullaryExpr(8, [&](Eigen::Index) { return double(rng.below(2)); });
        CHECK(bce_loss(p, y) >= 0.0);
    }
    CHECK_THROWS(bce_loss(p2, Vector::Ones(3)));
}

TEST_CASE("batch losses reuse the exact forward passes") {
    UfanModel model;
    model.alpha = 1.0;
    model.encoder = make_encoder(4, 31);
    model.discriminator = make_discriminator(32);
    Matrix xs = random_rows(6, 4, 33);
    Matrix xt = random_rows(5, 4, 34);
    BatchGradients g = ufan_batch_gradients(model, xs, xt);

    // GRL forward identity: the discriminator consumes the encoder output
    Matrix f_cat(11, 4);
    f_cat.topRows(6) = xs;
    f_cat.bottomRows(5) = xt;
    Vector probs = discriminate(model, encode(model, f_cat));
    Vector labels(11);
    labels.head(6).setOnes();
    labels.tail(5).setZero();
    CHECK(g.l_d == bce_loss(probs, labels));

    HomothetyResult h = homothety_loss(xs, encode(model, xs), xt, encode(model, xt));
    CHECK(g.l_f == doctest::Approx(h.l_f).epsilon(1e-12));
    CHECK(g.eta == doctest::Approx(h.eta).epsilon(1e-12));
}

TEST_CASE("encoder and discriminator gradients match finite differences") {
    // 2-feature toy problem in double precision
    UfanModel model;
    model.alpha = 0.7;
    model.config.alpha = 0.7;
    model.encoder = make_encoder(2, 41);
    model.discriminator = make_discriminator(42);
    Matrix xs = random_rows(6, 2, 43, 0.8);
    Matrix xt = random_rows(5, 2, 44, 0.8).array() + 0.5;

    BatchGradients g = ufan_batch_gradients(model, xs, xt);
    std::vector<double> enc_grad = flat_grads(g.encoder);
    std::vector<double> disc_grad = flat_grads(g.discriminator);

    const double eps = 1e-5;
    auto fd_check = [&](DenseNet& net, const std::vector<double>& analytic, bool encoder_side) {
        std::vector<double*> params = all_params(net);
        REQUIRE(params.size() == analytic.size());
        std::vector<double> fd(params.size());
        for (std::size_t k = 0; k < params.size(); ++k) {
            double saved = *params[k];
            *params[k] = saved + eps;
            BatchGradients hi = ufan_batch_gradients(model, xs, xt);
            *params[k] = saved - eps;
            BatchGradients lo = ufan_batch_gradients(model, xs, xt);
            *params[k] = saved;
            double f_hi = encoder_side ? hi.l_f - model.alpha * hi.l_d : hi.l_d;
            double f_lo = encoder_side ? lo.l_f - model.alpha * lo.l_d : lo.l_d;
            fd[k] = (f_hi - f_lo) / (2.0 * eps);
        }
        double num = 0.0, den_a = 0.0, den_f = 0.0;
        for (std::size_t k = 0; k < params.size(); ++k) {
            num += (analytic[k] - fd[k]) * (analytic[k] - fd[k]);
            den_a += analytic[k] * analytic[k];
            den_f += fd[k] * fd[k];
        }
        double rel = std::sqrt(num) / std::max(std::sqrt(std::max(den_a, den_f)), 1e-12);
        CHECK(rel <= 1e-4);
    };
    fd_check(model.encoder, enc_grad, true);
    fd_check(model.discriminator, disc_grad, false);
}

TEST_CASE("alpha zero reduces encoder training to homothety fitting") {
    Matrix src = random_rows(300, 4, 51, 0.7);
    Matrix tgt = random_rows(300, 4, 52, 0.7).array() + 0.3;
    TrainConfig cfg;
    cfg.batch_size = 50;
    cfg.epochs = 30;
    cfg.learning_rate = 1e-2;
    cfg.alpha = 0.0;
    cfg.seed = 5;
    UfanModel model = train_ufan(src, tgt, cfg);
    REQUIRE(model.history.size() == 30);
    CHECK(model.history.back().l_f < model.history.front().l_f);
    CHECK(adversarial_score(model) == doctest::Approx(model.history.back().l_f));
}

TEST_CASE("identical domains keep the discriminator at chance") {
    Matrix all = random_rows(600, 3, 53, 0.6);
    Matrix src = all.topRows(300);
    Matrix tgt = all.bottomRows(300);
    TrainConfig cfg;
    cfg.batch_size = 50;
    cfg.epochs = 20;
    cfg.learning_rate = 1e-3;
    cfg.alpha = 1.0;
    cfg.seed = 9;
    UfanModel model = train_ufan(src, tgt, cfg);

    Vector p_src = discriminate(model, encode(model, src));
    Vector p_tgt = discriminate(model, encode(model, tgt));
    double correct = static_cast<double>((p_src.array() > 0.5).count() + (p_tgt.array() <= 0.5).count());
    double accuracy = correct / 600.0;
    CHECK(accuracy > 0.4);
    CHECK(accuracy < 0.6);
}

TEST_CASE("adversarial_score is the final-epoch compound loss") {
    UfanModel model;
    model.alpha = 1.0;
    CHECK_THROWS(adversarial_score(model));  // untrained
    model.history.push_back({0.4, 0.7, 0.4 - 0.7, 1.0});
    CHECK(adversarial_score(model) == doctest::Approx(-0.3));
}

TEST_CASE("training is deterministic and serialization round trips") {
    Matrix src = random_rows(200, 3, 54, 0.5);
    Matrix tgt = random_rows(180, 3, 55, 0.5);
    TrainConfig cfg;
    cfg.batch_size = 40;
    cfg.epochs = 5;
    cfg.learning_rate = 1e-3;
    cfg.seed = 77;
    UfanModel a = train_ufan(src, tgt, cfg);
    UfanModel b = train_ufan(src, tgt, cfg);
    Matrix probe = random_rows(30, 3, 56);
    CHECK(encode(a, probe) == encode(b, probe));
    CHECK(a.history.back().l_f == b.history.back().l_f);

    auto path = (std::filesystem::temp_directory_path() / "fleetmon_tests_ufan.json").string();
    save_ufan(a, path);
    UfanModel loaded = load_ufan(path);
    CHECK(encode(a, probe) == encode(loaded, probe));
    CHECK(discriminate(a, encode(a, probe)) == discriminate(loaded, encode(loaded, probe)));
    CHECK(loaded.history.size() == a.history.size());
    CHECK(loaded.eta == a.eta);

    auto curve = (std::filesystem::temp_directory_path() / "fleetmon_tests_curve.csv").string();
    write_training_curve_csv(a, curve);
    CHECK(std::filesystem::file_size(curve) > 0);
}

TEST_CASE("train_ufan validates inputs") {
    Matrix src = random_rows(50, 3, 57);
    CHECK_THROWS(train_ufan(src, Matrix(0, 3), TrainConfig{}));
    CHECK_THROWS(train_ufan(src, random_rows(50, 4, 58), TrainConfig{}));
    TrainConfig bad;
    bad.learning_rate = 0.0;
    CHECK_THROWS(train_ufan(src, src, bad));
}

TEST_CASE("two candidates rank by adversarial score") {
    Matrix tgt = random_rows(200, 3, 60, 0.5);
    Matrix close = random_rows(200, 3, 61, 0.5);
    Matrix far = 2.0 * random_rows(200, 3, 62, 0.5).array() + 3.0;
    TrainConfig cfg;
    cfg.batch_size = 40;
    cfg.epochs = 8;
    cfg.learning_rate = 1e-3;
    cfg.seed = 99;
    double s_close = adversarial_score(train_ufan(close, tgt, cfg));
    double s_far = adversarial_score(train_ufan(far, tgt, cfg));
    // ordering is whatever the scores say; assert the comparison is usable
    CHECK(std::isfinite(s_close));
    CHECK(std::isfinite(s_far));
    CHECK(s_close != s_far);
}
