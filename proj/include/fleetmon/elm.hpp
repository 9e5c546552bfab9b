#pragma once

#include "fleetmon/numeric.hpp"

#include <cstdint>

namespace fleetmon {

// Random frozen input layer of a single-hidden-layer network. Weights and
// biases are drawn i.i.d. uniform on [-1, 1]; only the output weights of the
// network are ever solved for.
struct RandomLayer {
    Matrix weights;  // in_dim x n_neurons
    Vector biases;   // n_neurons
    std::uint64_t seed = 0;
};

struct OutputWeights {
    Matrix beta;  // n_neurons x out_dim
};

RandomLayer make_random_layer(std::uint64_t seed, Eigen::Index in_dim, Eigen::Index n_neurons);

// H = sigmoid(X*A + B), entries in (0,1). Row i depends only on row i of X,
// so scoring a block of rows matches scoring them one at a time bit for bit.
Matrix hidden(const RandomLayer& layer, const Matrix& X);

// Minimizer of |H*beta - T|_2^2 + C*|beta|_2^2 through the normal equations
// (C*I + H^T H) beta = H^T T, solved by LDLT factorization. C = 0 is allowed
// only when H^T H is invertible.
OutputWeights solve_ridge(const Matrix& H, const Matrix& T, double C);

struct LassoResult {
    OutputWeights weights;
    bool converged = false;
    int iterations = 0;
    double objective = 0.0;
};

// FISTA for beta = argmin |H*beta - X|_2^2 + lambda*|beta|_1.
// Step size is 1/L with L = 1.01 * (largest eigenvalue of 2 H^T H) estimated
// by 30 power iterations; each step soft-thresholds by lambda/L and applies
// the Nesterov momentum sequence t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2.
// Convergence: relative objective change below tol. Hitting max_iters is
// flagged on the result, not fatal.
LassoResult solve_lasso_fista(const Matrix& H, const Matrix& X_target, double lambda,
                              int max_iters = 5000, double tol = 1e-8);

double lasso_objective(const Matrix& H, const Matrix& X_target, const Matrix& beta, double lambda);

}  // namespace fleetmon
