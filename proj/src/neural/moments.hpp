#pragma once

#include <vector>

#include <Eigen/Dense>

namespace mimo::detail {

struct Moments {
    Eigen::VectorXd x, v, v_raw;  ///< v is v_raw floored at kVarianceFloor
};

Moments cavity_moments(const Eigen::MatrixXd& q, const std::vector<double>& alphabet);

/// Gradient w.r.t. q given gradients w.r.t. the (floored) mean and variance.
Eigen::MatrixXd moments_backward(const Eigen::MatrixXd& q, const std::vector<double>& alphabet, const Moments& m,
                                 const Eigen::VectorXd& d_x, const Eigen::VectorXd& d_v);

}  // namespace mimo::detail
