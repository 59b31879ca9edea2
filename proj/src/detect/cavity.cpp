#include "mimo/detect/cavity.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mimo {

std::pair<double, double> gaussian_product(double mean_a, double var_a, double mean_b, double var_b) {
    if (!(var_a > 0.0) || !(var_b > 0.0)) throw std::invalid_argument("gaussian_product: variances must be positive");
    const double prec = 1.0 / var_a + 1.0 / var_b;
    const double var = 1.0 / prec;
    const double mean = var * (mean_a / var_a + (std::isinf(var_b) ? 0.0 : mean_b / var_b));
    return {mean, var};
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd q(logits.rows(), logits.cols());
    for (Eigen::Index k = 0; k < logits.rows(); ++k) {
        const double top = logits.row(k).maxCoeff();
        q.row(k) = (logits.row(k).array() - top).exp();
        q.row(k) /= q.row(k).sum();
    }
    return q;
}

CavityDistribution discretize_gaussian(const Eigen::VectorXd& mean, const Eigen::VectorXd& var,
                                       const Constellation& constellation) {
    const Eigen::Index k_users = mean.size();
    const int m = constellation.size();
    CavityDistribution out;
    out.logits.resize(k_users, m);
    for (Eigen::Index k = 0; k < k_users; ++k) {
        const double v = std::max(var(k), kVarianceFloor);
        for (int a = 0; a < m; ++a) {
            const double d = constellation.real_points[static_cast<std::size_t>(a)] - mean(k);
            out.logits(k, a) = -d * d / (2.0 * v);
        }
    }
    out.q = softmax_rows(out.logits);
    return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> discrete_moments(const CavityDistribution& cavity,
                                                             const Constellation& constellation) {
    const Eigen::Index k_users = cavity.q.rows();
    const int m = constellation.size();
    Eigen::VectorXd x_hat(k_users);
    Eigen::VectorXd v_hat(k_users);
    for (Eigen::Index k = 0; k < k_users; ++k) {
        double mean = 0.0;
        for (int a = 0; a < m; ++a) mean += constellation.real_points[static_cast<std::size_t>(a)] * cavity.q(k, a);
        double var = 0.0;
        for (int a = 0; a < m; ++a) {
            const double d = constellation.real_points[static_cast<std::size_t>(a)] - mean;
            var += d * d * cavity.q(k, a);
        }
        x_hat(k) = mean;
        v_hat(k) = std::max(var, kVarianceFloor);
    }
    return {x_hat, v_hat};
}

Eigen::VectorXd hard_decision(const Eigen::VectorXd& soft, const Constellation& constellation) {
    Eigen::VectorXd out(soft.size());
    for (Eigen::Index k = 0; k < soft.size(); ++k) out(k) = constellation.nearest(soft(k));
    return out;
}

}  // namespace mimo
