#pragma once

#include <Eigen/Dense>

#include "mimo/core/system.hpp"

namespace mimo {

/// Quantities every detector derives from (H, y) once per instance.
struct ChannelGram {
    Eigen::MatrixXd gram;   ///< H^T H
    Eigen::VectorXd hty;    ///< H^T y
    double noise_var = 0.0;
};

ChannelGram channel_gram(const SystemInstance& instance);

}  // namespace mimo
