#pragma once

#include <utility>

#include <Eigen/Dense>

#include "mimo/core/constellation.hpp"

namespace mimo {

/// Lower bound applied to every cavity and estimator variance.
inline constexpr double kVarianceFloor = 1e-13;

/// Per-user categorical distribution over the real alphabet.
/// Row k is user k; column a is real_points[a].
struct CavityDistribution {
    Eigen::MatrixXd q;
    Eigen::MatrixXd logits;
};

/// Product of two scalar Gaussians N(mean_a, var_a) N(mean_b, var_b), up to
/// normalization.  An infinite variance acts as an uninformative factor.
std::pair<double, double> gaussian_product(double mean_a, double var_a, double mean_b, double var_b);

/// N(mean_k, var_k) evaluated on the alphabet and renormalized per row.
CavityDistribution discretize_gaussian(const Eigen::VectorXd& mean, const Eigen::VectorXd& var,
                                       const Constellation& constellation);

/// Row-wise softmax with max subtraction.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

/// Mean and variance of each row of the cavity over the alphabet.
/// Variances are floored at kVarianceFloor.
std::pair<Eigen::VectorXd, Eigen::VectorXd> discrete_moments(const CavityDistribution& cavity,
                                                             const Constellation& constellation);

/// Nearest alphabet point per real dimension.
Eigen::VectorXd hard_decision(const Eigen::VectorXd& soft, const Constellation& constellation);

}  // namespace mimo
