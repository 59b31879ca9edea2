#pragma once

#include <span>

#include <Eigen/Dense>

#include "mimo/detect/cavity.hpp"
#include "mimo/neural/neural.hpp"

namespace mimo {

inline constexpr double kLogFloor = 1e-30;

/// Alphabet index of every entry of x_true; throws std::invalid_argument if
/// an entry is not an alphabet point.
Eigen::VectorXi symbol_labels(const Eigen::VectorXd& x_true, const Constellation& constellation);

/// -sum_k log q_k(x_k) for one sample, with the log floored at kLogFloor.
double sample_cross_entropy(const CavityDistribution& cavity, const Eigen::VectorXd& x_true,
                            const Constellation& constellation);

/// Gradient of weight * sample_cross_entropy w.r.t. the cavity logits.
Eigen::MatrixXd cross_entropy_logit_gradient(const CavityDistribution& cavity, const Eigen::VectorXd& x_true,
                                             const Constellation& constellation, double weight);

/// Batch loss: the per-sample sums averaged over the W samples.
double cross_entropy_loss(std::span<const CavityDistribution> cavities, std::span<const Eigen::VectorXd> x_true,
                          const Constellation& constellation);

/// Detector settings used while training (T, eta, rounds).
struct UnrolledConfig {
    DetectorKind kind = DetectorKind::Gepnet;
    int iterations = 10;
    double eta = 0.7;  ///< GEPNet only
    int rounds = -1;
    bool truncate_observation = false;
};

/// Loss of one sample (forward only).
double sample_loss(const SystemInstance& instance, const GnnParams& params, const UnrolledConfig& config);

/// Loss of one sample; accumulates weight * d(loss)/d(params) into `grad`.
double sample_loss_and_gradient(const SystemInstance& instance, const GnnParams& params,
                                const UnrolledConfig& config, double weight, GnnParams& grad);

}  // namespace mimo
