#include "mimo/detect/ep.hpp"

#include <stdexcept>

namespace mimo {

EpObservation ep_observe(const ChannelGram& gram, const Eigen::VectorXd& gamma, const Eigen::VectorXd& lambda,
                         bool want_full_covariance) {
    const Eigen::Index k_users = gram.gram.rows();
    if ((lambda.array() <= 0.0).any()) throw std::invalid_argument("ep_observe: lambda must be strictly positive");

    Eigen::MatrixXd system = gram.gram / gram.noise_var;
    system.diagonal() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(system);
    if (llt.info() != Eigen::Success) throw std::runtime_error("ep_observe: system matrix is not positive definite");

    EpObservation obs;
    Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(k_users, k_users));
    obs.sigma_post = cov.diagonal();
    obs.mu_post = llt.solve(gram.hty / gram.noise_var + gamma);

    obs.v_obs.resize(k_users);
    obs.x_obs.resize(k_users);
    for (Eigen::Index k = 0; k < k_users; ++k) {
        const double s = obs.sigma_post(k);
        // Sigma_k < 1/lambda_k holds exactly; the floors only catch rounding.
        const double denom = std::max(1.0 - s * lambda(k), kVarianceFloor);
        const double v = std::max(s / denom, kVarianceFloor);
        obs.v_obs(k) = v;
        obs.x_obs(k) = v * (obs.mu_post(k) / s - gamma(k));
    }
    if (want_full_covariance) obs.sigma_full = std::move(cov);
    return obs;
}

EpObservation ep_observe(const SystemInstance& instance, const Eigen::VectorXd& gamma,
                         const Eigen::VectorXd& lambda) {
    return ep_observe(channel_gram(instance), gamma, lambda);
}

EpUpdate ep_estimate(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& v_hat, const Eigen::VectorXd& x_obs,
                     const Eigen::VectorXd& v_obs, const Eigen::VectorXd& prev_gamma,
                     const Eigen::VectorXd& prev_lambda, double eta) {
    const Eigen::Index k_users = x_hat.size();
    EpUpdate up;
    up.gamma.resize(k_users);
    up.lambda.resize(k_users);
    up.accepted.resize(k_users);
    for (Eigen::Index k = 0; k < k_users; ++k) {
        double lam = 1.0 / v_hat(k) - 1.0 / v_obs(k);
        double gam = x_hat(k) / v_hat(k) - x_obs(k) / v_obs(k);
        // lambda is a precision: keep the previous pair unless the update is positive.
        const bool ok = lam > 0.0;
        if (!ok) {
            lam = prev_lambda(k);
            gam = prev_gamma(k);
        }
        up.accepted(k) = ok ? 1.0 : 0.0;
        up.lambda(k) = (1.0 - eta) * lam + eta * prev_lambda(k);
        up.gamma(k) = (1.0 - eta) * gam + eta * prev_gamma(k);
    }
    return up;
}

DetectionResult ep_detect(const SystemInstance& instance, const EpConfig& config, bool trace) {
    if (config.iterations < 1) throw std::invalid_argument("ep_detect: need at least one iteration");
    const Eigen::Index k_users = instance.users();
    const Constellation& omega = instance.constellation;
    const ChannelGram gram = channel_gram(instance);

    Eigen::VectorXd gamma = Eigen::VectorXd::Zero(k_users);
    Eigen::VectorXd lambda = Eigen::VectorXd::Constant(k_users, 1.0 / omega.es_real);
    Eigen::VectorXd x_hat;

    DetectionResult result;
    for (int t = 1; t <= config.iterations; ++t) {
        EpObservation obs = ep_observe(gram, gamma, lambda);
        CavityDistribution cavity = discretize_gaussian(obs.x_obs, obs.v_obs, omega);
        auto [xh, vh] = discrete_moments(cavity, omega);
        EpUpdate up = ep_estimate(xh, vh, obs.x_obs, obs.v_obs, gamma, lambda, config.eta);
        gamma = std::move(up.gamma);
        lambda = std::move(up.lambda);
        if (trace) {
            result.x_soft_trace.push_back(xh);
            result.trace.push_back({obs.x_obs, obs.v_obs, obs.mu_post, obs.sigma_post, xh, vh});
        }
        x_hat = std::move(xh);
    }
    result.x_hard = hard_decision(x_hat, omega);
    result.iterations_run = config.iterations;
    return result;
}

}  // namespace mimo
