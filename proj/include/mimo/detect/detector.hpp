#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mimo/core/system.hpp"

namespace mimo {

/// Per-iteration internals exposed for analysis.
///
/// `cavity_*` is what the symbol estimator consumed (x_obs/v_obs for EP-type
/// detectors, mu/Sigma for PIC-type ones); `post_*` is the detector's
/// approximate posterior marginal (mu/diag Sigma).
struct IterationTrace {
    Eigen::VectorXd cavity_mean;
    Eigen::VectorXd cavity_var;
    Eigen::VectorXd post_mean;
    Eigen::VectorXd post_var;
    Eigen::VectorXd x_hat;
    Eigen::VectorXd v_hat;
};

struct DetectionResult {
    Eigen::VectorXd x_hard;
    /// Soft estimates x_hat per iteration (only when tracing).
    std::vector<Eigen::VectorXd> x_soft_trace;
    /// Cavity/posterior internals per iteration (only when tracing).
    std::vector<IterationTrace> trace;
    int iterations_run = 0;
};

/// Common detector contract used by the benchmark harness and analysis suite.
class Detector {
public:
    virtual ~Detector() = default;
    virtual std::string name() const = 0;
    virtual DetectionResult detect(const SystemInstance& instance, bool trace = false) const = 0;
};

}  // namespace mimo
