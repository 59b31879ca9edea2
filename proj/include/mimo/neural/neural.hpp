#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mimo/detect/cavity.hpp"
#include "mimo/detect/detector.hpp"
#include "mimo/detect/ep.hpp"
#include "mimo/gnn/gnn.hpp"

namespace mimo {

enum class DetectorKind { Gepnet, Gpicnet };

std::string to_string(DetectorKind kind);
/// Accepts "gepnet" or "gpicnet"; throws std::invalid_argument otherwise.
DetectorKind parse_detector_kind(const std::string& name);

/// Where the estimation module takes its cavity from.  `Gaussian` replaces the
/// GNN readout by the discretized Gaussian cavity of the underlying classical
/// detector, which must then reproduce it exactly.
enum class CavitySource { Gnn, Gaussian };

struct GepnetConfig {
    int iterations = 10;
    double eta = 0.7;
    int rounds = -1;  ///< GNN rounds per iteration; -1 uses params.dims.rounds
    CavitySource cavity = CavitySource::Gnn;
};

struct GpicnetConfig {
    int iterations = 15;
    int rounds = -1;
    CavitySource cavity = CavitySource::Gnn;
};

/// Everything the reverse pass of one GEPNet iteration needs.
struct GepnetStep {
    Eigen::VectorXd gamma_prev, lambda_prev;
    Eigen::MatrixXd sigma_full;
    Eigen::VectorXd mu, x_obs, v_obs;
    Eigen::VectorXd denom;  ///< 1 - Sigma_k lambda_k before flooring
    ForwardTape gnn;
    Eigen::MatrixXd q;
    Eigen::VectorXd x_hat, v_hat, v_raw;
    Eigen::VectorXd accepted;
};

struct GepnetTape {
    EdgeAttributes edges;
    std::vector<GepnetStep> steps;
    double eta = 0.0;
    std::vector<double> alphabet;
};

struct GpicnetStep {
    Eigen::VectorXd x_prev, v_prev;  ///< combined estimates entering the observation
    Eigen::VectorXd mu, sigma, sigma_raw;
    ForwardTape gnn;
    Eigen::MatrixXd q;
    Eigen::VectorXd x_new, v_new, v_raw;
    Eigen::VectorXd residual;  ///< H^T y - G x_new
    Eigen::VectorXd err_prev, err_cur, rho;
};

struct GpicnetTape {
    EdgeAttributes edges;
    Eigen::VectorXd hty;
    std::vector<GpicnetStep> steps;
    std::vector<double> alphabet;
};

struct NeuralResult {
    DetectionResult detection;
    CavityDistribution final_cavity;
    /// Per-iteration cavity used by the estimator (only when tracing).
    std::vector<CavityDistribution> cavity_trace;
};

/// Alg.-1 style run: EP observation, GNN-refined cavity, EP estimation with
/// the positivity revert and damping.  Records a tape when `tape` is given
/// (requires CavitySource::Gnn).
NeuralResult gepnet_forward(const SystemInstance& instance, const GnnParams& params, const GepnetConfig& config,
                            GepnetTape* tape = nullptr, bool trace = false);

/// Alg.-2 style run: PIC observation, GNN-refined cavity, DSC for t > 1.
NeuralResult gpicnet_forward(const SystemInstance& instance, const GnnParams& params, const GpicnetConfig& config,
                             GpicnetTape* tape = nullptr, bool trace = false);

/// Reverse pass through the whole unrolled detector given the gradient of
/// the loss w.r.t. the final readout logits (K x M).  Accumulates into
/// `d_params`.  With `truncate_observation` the gradient is not propagated
/// from (gamma, lambda) back through the observation module.
void gepnet_backward(const GepnetTape& tape, const Eigen::MatrixXd& d_logits, const GnnParams& params,
                     GnnParams& d_params, bool truncate_observation = false);
void gpicnet_backward(const GpicnetTape& tape, const Eigen::MatrixXd& d_logits, const GnnParams& params,
                      GnnParams& d_params, bool truncate_observation = false);

class GepnetDetector final : public Detector {
public:
    GepnetDetector(std::shared_ptr<const GnnParams> params, GepnetConfig config = {})
        : params_(std::move(params)), config_(config) {}
    std::string name() const override { return "gepnet"; }
    DetectionResult detect(const SystemInstance& instance, bool trace = false) const override {
        return gepnet_forward(instance, *params_, config_, nullptr, trace).detection;
    }

private:
    std::shared_ptr<const GnnParams> params_;
    GepnetConfig config_;
};

class GpicnetDetector final : public Detector {
public:
    GpicnetDetector(std::shared_ptr<const GnnParams> params, GpicnetConfig config = {})
        : params_(std::move(params)), config_(config) {}
    std::string name() const override { return "gpicnet"; }
    DetectionResult detect(const SystemInstance& instance, bool trace = false) const override {
        return gpicnet_forward(instance, *params_, config_, nullptr, trace).detection;
    }

private:
    std::shared_ptr<const GnnParams> params_;
    GpicnetConfig config_;
};

}  // namespace mimo
