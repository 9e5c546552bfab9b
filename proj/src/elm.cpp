#include "fleetmon/elm.hpp"

#include <cmath>
#include <stdexcept>

namespace fleetmon {

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Matrix soft_threshold(const Matrix& Z, double amount) {
    return Z.array().sign() * (Z.array().abs() - amount).max(0.0);
}

}  // namespace

RandomLayer make_random_layer(std::uint64_t seed, Eigen::Index in_dim, Eigen::Index n_neurons) {
    if (in_dim < 1 || n_neurons < 1) throw std::invalid_argument("random layer dimensions must be >= 1");
    RandomLayer layer;
    layer.seed = seed;
    layer.weights.resize(in_dim, n_neurons);
    layer.biases.resize(n_neurons);
    Rng rng(seed);
    for (Eigen::Index i = 0; i < in_dim; ++i)
        for (Eigen::Index j = 0; j < n_neurons; ++j) layer.weights(i, j) = rng.uniform(-1.0, 1.0);
    for (Eigen::Index j = 0; j < n_neurons; ++j) layer.biases[j] = rng.uniform(-1.0, 1.0);
    return layer;
}

Matrix hidden(const RandomLayer& layer, const Matrix& X) {
    if (X.cols() != layer.weights.rows())
        throw std::invalid_argument("hidden: input has " + std::to_string(X.cols()) +
                                    " columns, layer expects " + std::to_string(layer.weights.rows()));
    // lazyProduct evaluates each coefficient as an independent dot product,
    // keeping results invariant to how the rows are batched.
    Matrix H = X.lazyProduct(layer.weights);
    H.rowwise() += layer.biases.transpose();
    return H.unaryExpr([](double z) { return sigmoid(z); });
}

OutputWeights solve_ridge(const Matrix& H, const Matrix& T, double C) {
    if (H.rows() != T.rows()) throw std::invalid_argument("solve_ridge: row mismatch");
    if (C < 0.0) throw std::invalid_argument("solve_ridge: C must be >= 0");

    const Eigen::Index m = H.cols();
    Matrix gram = Matrix::Zero(m, m);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(H.transpose());
    gram = gram.selfadjointView<Eigen::Lower>();
    gram.diagonal().array() += C;
    Matrix rhs = H.transpose() * T;

    Eigen::LDLT<Matrix> ldlt(gram);
    if (C == 0.0) {
        // the normal equations are always consistent, so rank deficiency has
        // to be caught in the factorization itself
        Vector d = ldlt.vectorD().cwiseAbs();
        if (d.minCoeff() < 1e-12 * d.maxCoeff())
            throw std::runtime_error("solve_ridge: singular normal equations (C = 0)");
    }
    OutputWeights out;
    out.beta = ldlt.solve(rhs);

    // Up to two refinement passes to hold the 1e-10 relative residual contract.
    const double rhs_norm = std::max(rhs.norm(), 1e-30);
    double residual = (gram * out.beta - rhs).norm();
    for (int pass = 0; pass < 2 && out.beta.allFinite() && residual > 1e-10 * rhs_norm; ++pass) {
        out.beta += ldlt.solve(rhs - gram * out.beta);
        residual = (gram * out.beta - rhs).norm();
    }
    if (!out.beta.allFinite() || residual > 1e-10 * rhs_norm)
        throw std::runtime_error("solve_ridge: singular normal equations (C = " + std::to_string(C) + ")");
    return out;
}

double lasso_objective(const Matrix& H, const Matrix& X_target, const Matrix& beta, double lambda) {
    return (H * beta - X_target).squaredNorm() + lambda * beta.array().abs().sum();
}

LassoResult solve_lasso_fista(const Matrix& H, const Matrix& X_target, double lambda, int max_iters,
                              double tol) {
    if (H.rows() != X_target.rows()) throw std::invalid_argument("solve_lasso_fista: row mismatch");
    if (lambda <= 0.0) throw std::invalid_argument("solve_lasso_fista: lambda must be > 0");
    if (max_iters < 1) throw std::invalid_argument("solve_lasso_fista: max_iters must be >= 1");
    if (!H.allFinite() || !X_target.allFinite())
        throw std::invalid_argument("solve_lasso_fista: non-finite input");

    const Eigen::Index m = H.cols();
    const Eigen::Index d = X_target.cols();

    // All iteration work happens on the m x m Gram matrix; n only enters the
    // precomputation below.
    Matrix gram = Matrix::Zero(m, m);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(H.transpose());
    gram = gram.selfadjointView<Eigen::Lower>();
    Matrix hTx = H.transpose() * X_target;
    const double target_sq = X_target.squaredNorm();

    auto objective = [&](const Matrix& beta) {
        double quad = (beta.transpose() * gram * beta).trace() - 2.0 * (beta.transpose() * hTx).trace() +
                      target_sq;
        return quad + lambda * beta.array().abs().sum();
    };

    // Power iteration for the largest eigenvalue of 2 H^T H.
    Vector v = Vector::Ones(m) / std::sqrt(static_cast<double>(m));
    double eig = 0.0;
    for (int it = 0; it < 30; ++it) {
        Vector w = gram * v;
        double norm = w.norm();
        if (norm == 0.0) break;
        v = w / norm;
        eig = norm;
    }
    double L = 1.01 * 2.0 * eig;

    LassoResult result;
    if (L <= 0.0) {
        // H is identically zero: the penalty alone decides, beta = 0.
        result.weights.beta = Matrix::Zero(m, d);
        result.converged = true;
        result.objective = target_sq;
        return result;
    }
    const double step = 1.0 / L;

    Matrix beta = Matrix::Zero(m, d);
    Matrix y = beta;
    double t = 1.0;
    double prev_obj = objective(beta);
    result.objective = prev_obj;

    for (int k = 1; k <= max_iters; ++k) {
        Matrix grad = 2.0 * (gram * y - hTx);
        Matrix beta_next = soft_threshold(y - step * grad, lambda * step);
        double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = beta_next + ((t - 1.0) / t_next) * (beta_next - beta);

        double obj = objective(beta_next);
        beta = std::move(beta_next);
        t = t_next;
        result.iterations = k;
        result.objective = obj;
        if (std::abs(prev_obj - obj) < tol * std::max(std::abs(prev_obj), 1e-30)) {
            result.converged = true;
            break;
        }
        prev_obj = obj;
    }
    result.weights.beta = std::move(beta);
    return result;
}

}  // namespace fleetmon
