#pragma once

#include "fleetmon/numeric.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fleetmon {

enum class Activation { Tanh, Logistic, Identity };

struct DenseLayer {
    Matrix W;  // in_dim x out_dim
    Vector b;  // out_dim
    Activation act = Activation::Tanh;
};

// Small fully connected net with manual forward/backward. The backward pass
// takes the loss gradient at the output and accumulates parameter gradients
// while returning the gradient at the input.
struct DenseNet {
    std::vector<DenseLayer> layers;

    struct Cache {
        std::vector<Matrix> inputs;   // input to each layer
        std::vector<Matrix> outputs;  // post-activation output of each layer
    };

    struct Grads {
        std::vector<Matrix> dW;
        std::vector<Vector> db;

        void init_like(const DenseNet& net);
        void accumulate(const Grads& other);
        void scale(double factor);
    };

    Matrix forward(const Matrix& X) const;
    Matrix forward(const Matrix& X, Cache& cache) const;
    Matrix backward(const Cache& cache, const Matrix& d_out, Grads& grads) const;
    void sgd_step(const Grads& grads, double learning_rate);

    Eigen::Index in_dim() const { return layers.front().W.rows(); }
    Eigen::Index out_dim() const { return layers.back().W.cols(); }
};

// Glorot-uniform weights, zero biases, deterministic in the seed.
DenseNet make_dense_net(const std::vector<Eigen::Index>& dims, const std::vector<Activation>& acts,
                        std::uint64_t seed);
// feature encoder N1: in -> 15 -> 10, tanh throughout
DenseNet make_encoder(Eigen::Index in_dim, std::uint64_t seed);
// discriminator N2: 10 -> 10 -> 5 -> 1 with a logistic probability head
DenseNet make_discriminator(std::uint64_t seed);

// Reading of the per-pair residual |dX - eta*dF| in the homothety loss.
// Squared is the default (closed-form eta, smooth gradients); Absolute keeps
// the literal norm-of-scalar reading and solves eta by weighted median.
enum class HomothetyReading { Squared, Absolute };

struct TrainConfig {
    Eigen::Index batch_size = 150;
    int epochs = 100;
    double learning_rate = 1e-4;
    double alpha = 1.0;  // gradient reversal factor
    std::uint64_t seed = 0;
    HomothetyReading reading = HomothetyReading::Squared;
};

struct EpochStats {
    double l_f = 0.0;
    double l_d = 0.0;
    double adversarial = 0.0;  // l_f - alpha * l_d
    double eta = 0.0;
};

struct UfanModel {
    DenseNet encoder;
    DenseNet discriminator;
    double alpha = 1.0;
    double eta = 0.0;  // homothety scale of the final epoch
    TrainConfig config;
    std::vector<EpochStats> history;
};

Matrix encode(const UfanModel& model, const Matrix& X);
// probability that a row came from the source domain (label 1 = source)
Vector discriminate(const UfanModel& model, const Matrix& F);

// Closed-form minimizer of sum_i w_i (dX_i - eta*dF_i)^2.
double optimal_eta(const Vector& dX, const Vector& dF, const Vector& weights);
// Weighted-median minimizer of sum_i w_i |dX_i - eta*dF_i|.
double optimal_eta_absolute(const Vector& dX, const Vector& dF, const Vector& weights);

struct HomothetyResult {
    double l_f = 0.0;
    double eta = 0.0;
};

// L_F over all unordered within-domain pairs of both batches, each domain
// normalized by its pair count, evaluated at the jointly optimal eta.
HomothetyResult homothety_loss(const Matrix& X_src, const Matrix& F_src, const Matrix& X_tgt,
                               const Matrix& F_tgt, HomothetyReading reading = HomothetyReading::Squared);

// Mean binary cross-entropy; probabilities clamped to [1e-7, 1 - 1e-7].
double bce_loss(const Vector& probs, const Vector& labels);

// Losses and parameter gradients for one batch pair. The encoder gradient
// already contains the reversal: grad(L_F) - alpha * grad(L_D). Exposed so
// gradients can be checked against finite differences.
struct BatchGradients {
    double l_f = 0.0;
    double l_d = 0.0;
    double eta = 0.0;
    DenseNet::Grads encoder;
    DenseNet::Grads discriminator;
};

BatchGradients ufan_batch_gradients(const UfanModel& model, const Matrix& X_src, const Matrix& X_tgt);

UfanModel train_ufan(const Matrix& source, const Matrix& target_train, const TrainConfig& cfg);

// Final-epoch L_F - alpha * L_D.
double adversarial_score(const UfanModel& model);

void save_ufan(const UfanModel& model, const std::string& path);
UfanModel load_ufan(const std::string& path);
void write_training_curve_csv(const UfanModel& model, const std::string& path);

}  // namespace fleetmon
