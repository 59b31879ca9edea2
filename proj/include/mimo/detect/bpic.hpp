#pragma once

#include <Eigen/Dense>

#include "mimo/detect/detector.hpp"
#include "mimo/detect/gram.hpp"

namespace mimo {

struct BpicConfig {
    int iterations = 10;
};

struct BpicState {
    Eigen::VectorXd x_hat;
    Eigen::VectorXd v_hat;
    Eigen::VectorXd mu;
    Eigen::VectorXd sigma;
    Eigen::VectorXd dsc_error_prev;
    Eigen::VectorXd dsc_error_cur;
    Eigen::VectorXd rho;
    int iteration = 0;
};

/// Initial state: x_hat = 0 and v_hat = 0, so the first observation is the
/// plain matched filter with noise-only variance.
BpicState bpic_initial_state(const SystemInstance& instance);

struct BpicObservation {
    Eigen::VectorXd mu;
    Eigen::VectorXd sigma;
};

/// Interference-cancelled matched filter and its variance.
/// Throws std::invalid_argument on a zero-norm channel column.
BpicObservation bpic_observe(const ChannelGram& gram, const Eigen::VectorXd& x_hat_prev,
                             const Eigen::VectorXd& v_hat_prev);
BpicObservation bpic_observe(const SystemInstance& instance, const Eigen::VectorXd& x_hat_prev,
                             const Eigen::VectorXd& v_hat_prev);

/// Matched-filter squared error of each user for the estimate x_hat.
Eigen::VectorXd dsc_errors(const ChannelGram& gram, const Eigen::VectorXd& x_hat);

/// Decision-statistics combining weight; 0.5 when both errors vanish.
double dsc_weight(double error_prev, double error_cur);

/// Combines fresh estimates with the previous ones held in `state`.
/// On the first iteration (state.iteration == 0) only the errors are recorded.
/// Returns the state with x_hat/v_hat/rho/errors updated and iteration advanced.
BpicState bpic_dsc(const Eigen::VectorXd& x_hat_new, const Eigen::VectorXd& v_hat_new, const BpicState& state,
                   const ChannelGram& gram);

DetectionResult bpic_detect(const SystemInstance& instance, const BpicConfig& config = {}, bool trace = false);

class BpicDetector final : public Detector {
public:
    explicit BpicDetector(BpicConfig config = {}) : config_(config) {}
    std::string name() const override { return "bpic"; }
    DetectionResult detect(const SystemInstance& instance, bool trace = false) const override {
        return bpic_detect(instance, config_, trace);
    }

private:
    BpicConfig config_;
};

}  // namespace mimo
