#pragma once

#include <Eigen/Dense>

#include "mimo/detect/cavity.hpp"
#include "mimo/detect/detector.hpp"
#include "mimo/detect/gram.hpp"

namespace mimo {

struct EpConfig {
    int iterations = 10;
    double eta = 0.9;
};

/// Tunable prior parameters and the quantities derived from them in one
/// EP iteration.
struct EpState {
    Eigen::VectorXd gamma;
    Eigen::VectorXd lambda;
    Eigen::VectorXd sigma_post;
    Eigen::VectorXd mu_post;
    Eigen::VectorXd x_obs;
    Eigen::VectorXd v_obs;
    Eigen::VectorXd x_hat;
    Eigen::VectorXd v_hat;
    int iteration = 0;
};

/// Output of the observation module.  `sigma_full` is the full covariance,
/// filled only when requested.
struct EpObservation {
    Eigen::VectorXd sigma_post;
    Eigen::VectorXd mu_post;
    Eigen::VectorXd x_obs;
    Eigen::VectorXd v_obs;
    Eigen::MatrixXd sigma_full;
};

/// Gaussian posterior under the (gamma, lambda) prior and its per-user cavity.
/// Throws std::invalid_argument if any lambda is not strictly positive and
/// std::runtime_error if the system matrix cannot be factored.
EpObservation ep_observe(const ChannelGram& gram, const Eigen::VectorXd& gamma, const Eigen::VectorXd& lambda,
                         bool want_full_covariance = false);
EpObservation ep_observe(const SystemInstance& instance, const Eigen::VectorXd& gamma,
                         const Eigen::VectorXd& lambda);

struct EpUpdate {
    Eigen::VectorXd gamma;
    Eigen::VectorXd lambda;
    /// 1 where the fresh update was accepted, 0 where it reverted.
    Eigen::VectorXd accepted;
};

/// Moment-matching update with the non-positive-lambda revert and damping.
EpUpdate ep_estimate(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& v_hat, const Eigen::VectorXd& x_obs,
                     const Eigen::VectorXd& v_obs, const Eigen::VectorXd& prev_gamma,
                     const Eigen::VectorXd& prev_lambda, double eta);

/// Runs T observe/estimate rounds and returns hard decisions from x_hat^(T).
DetectionResult ep_detect(const SystemInstance& instance, const EpConfig& config = {}, bool trace = false);

class EpDetector final : public Detector {
public:
    explicit EpDetector(EpConfig config = {}) : config_(config) {}
    std::string name() const override { return "ep"; }
    DetectionResult detect(const SystemInstance& instance, bool trace = false) const override {
        return ep_detect(instance, config_, trace);
    }

private:
    EpConfig config_;
};

}  // namespace mimo
