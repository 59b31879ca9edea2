#include "mimo/train/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace mimo {

Eigen::VectorXi symbol_labels(const Eigen::VectorXd& x_true, const Constellation& constellation) {
    Eigen::VectorXi labels(x_true.size());
    for (Eigen::Index k = 0; k < x_true.size(); ++k) {
        labels(k) = constellation.index_of(x_true(k));
        if (labels(k) < 0) throw std::invalid_argument("cross-entropy: label is not a constellation point");
    }
    return labels;
}

double sample_cross_entropy(const CavityDistribution& cavity, const Eigen::VectorXd& x_true,
                            const Constellation& constellation) {
    const Eigen::VectorXi labels = symbol_labels(x_true, constellation);
    double loss = 0.0;
    for (Eigen::Index k = 0; k < labels.size(); ++k) loss -= std::log(std::max(cavity.q(k, labels(k)), kLogFloor));
    return loss;
}

Eigen::MatrixXd cross_entropy_logit_gradient(const CavityDistribution& cavity, const Eigen::VectorXd& x_true,
                                             const Constellation& constellation, double weight) {
    const Eigen::VectorXi labels = symbol_labels(x_true, constellation);
    Eigen::MatrixXd d = cavity.q * weight;
    for (Eigen::Index k = 0; k < labels.size(); ++k) {
        // Below the floor the loss is constant in the logits.
        if (cavity.q(k, labels(k)) < kLogFloor)
            d.row(k).setZero();
        else
            d(k, labels(k)) -= weight;
    }
    return d;
}

double cross_entropy_loss(std::span<const CavityDistribution> cavities, std::span<const Eigen::VectorXd> x_true,
                          const Constellation& constellation) {
    if (cavities.size() != x_true.size() || cavities.empty())
        throw std::invalid_argument("cross_entropy_loss: batch sizes differ or batch is empty");
    double total = 0.0;
    for (std::size_t w = 0; w < cavities.size(); ++w)
        total += sample_cross_entropy(cavities[w], x_true[w], constellation);
    return total / static_cast<double>(cavities.size());
}

double sample_loss(const SystemInstance& instance, const GnnParams& params, const UnrolledConfig& config) {
    NeuralResult r;
    if (config.kind == DetectorKind::Gepnet)
        r = gepnet_forward(instance, params, {config.iterations, config.eta, config.rounds, CavitySource::Gnn});
    else
        r = gpicnet_forward(instance, params, {config.iterations, config.rounds, CavitySource::Gnn});
    return sample_cross_entropy(r.final_cavity, instance.x_true, instance.constellation);
}

double sample_loss_and_gradient(const SystemInstance& instance, const GnnParams& params,
                                const UnrolledConfig& config, double weight, GnnParams& grad) {
    if (config.kind == DetectorKind::Gepnet) {
        GepnetTape tape;
        NeuralResult r = gepnet_forward(instance, params,
                                        {config.iterations, config.eta, config.rounds, CavitySource::Gnn}, &tape);
        const Eigen::MatrixXd d = cross_entropy_logit_gradient(r.final_cavity, instance.x_true,
                                                               instance.constellation, weight);
        gepnet_backward(tape, d, params, grad, config.truncate_observation);
        return sample_cross_entropy(r.final_cavity, instance.x_true, instance.constellation);
    }
    GpicnetTape tape;
    NeuralResult r = gpicnet_forward(instance, params, {config.iterations, config.rounds, CavitySource::Gnn}, &tape);
    const Eigen::MatrixXd d =
        cross_entropy_logit_gradient(r.final_cavity, instance.x_true, instance.constellation, weight);
    gpicnet_backward(tape, d, params, grad, config.truncate_observation);
    return sample_cross_entropy(r.final_cavity, instance.x_true, instance.constellation);
}

}  // namespace mimo
