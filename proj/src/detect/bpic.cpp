#include "mimo/detect/bpic.hpp"

#include <stdexcept>

#include "mimo/detect/cavity.hpp"

namespace mimo {

BpicState bpic_initial_state(const SystemInstance& instance) {
    const Eigen::Index k_users = instance.users();
    BpicState s;
    s.x_hat = Eigen::VectorXd::Zero(k_users);
    s.v_hat = Eigen::VectorXd::Zero(k_users);
    s.dsc_error_prev = Eigen::VectorXd::Zero(k_users);
    s.dsc_error_cur = Eigen::VectorXd::Zero(k_users);
    s.rho = Eigen::VectorXd::Zero(k_users);
    return s;
}

BpicObservation bpic_observe(const ChannelGram& gram, const Eigen::VectorXd& x_hat_prev,
                             const Eigen::VectorXd& v_hat_prev) {
    const Eigen::Index k_users = gram.gram.rows();
    const Eigen::VectorXd g_diag = gram.gram.diagonal();
    if ((g_diag.array() <= 0.0).any()) throw std::invalid_argument("bpic_observe: zero-norm channel column");

    const Eigen::VectorXd interference = gram.gram * x_hat_prev;
    const Eigen::VectorXd leak = gram.gram.array().square().matrix() * v_hat_prev;

    BpicObservation obs;
    obs.mu.resize(k_users);
    obs.sigma.resize(k_users);
    for (Eigen::Index k = 0; k < k_users; ++k) {
        const double gkk = g_diag(k);
        // Exclude user k itself from the cancelled interference and leakage.
        const double cancelled = interference(k) - gkk * x_hat_prev(k);
        const double leaked = leak(k) - gkk * gkk * v_hat_prev(k);
        obs.mu(k) = (gram.hty(k) - cancelled) / gkk;
        obs.sigma(k) = std::max((leaked + gkk * gram.noise_var) / (gkk * gkk), kVarianceFloor);
    }
    return obs;
}

BpicObservation bpic_observe(const SystemInstance& instance, const Eigen::VectorXd& x_hat_prev,
                             const Eigen::VectorXd& v_hat_prev) {
    return bpic_observe(channel_gram(instance), x_hat_prev, v_hat_prev);
}

Eigen::VectorXd dsc_errors(const ChannelGram& gram, const Eigen::VectorXd& x_hat) {
    const Eigen::VectorXd residual = gram.hty - gram.gram * x_hat;
    return (residual.array() / gram.gram.diagonal().array()).square().matrix();
}

double dsc_weight(double error_prev, double error_cur) {
    const double total = error_prev + error_cur;
    if (total <= 0.0) return 0.5;
    return error_prev / total;
}

BpicState bpic_dsc(const Eigen::VectorXd& x_hat_new, const Eigen::VectorXd& v_hat_new, const BpicState& state,
                   const ChannelGram& gram) {
    BpicState next = state;
    next.mu = state.mu;
    next.sigma = state.sigma;
    next.dsc_error_cur = dsc_errors(gram, x_hat_new);
    if (state.iteration == 0) {
        next.x_hat = x_hat_new;
        next.v_hat = v_hat_new;
        next.rho = Eigen::VectorXd::Ones(x_hat_new.size());
    } else {
        const Eigen::Index k_users = x_hat_new.size();
        next.rho.resize(k_users);
        for (Eigen::Index k = 0; k < k_users; ++k) {
            const double rho = dsc_weight(state.dsc_error_cur(k), next.dsc_error_cur(k));
            next.rho(k) = rho;
            next.x_hat(k) = (1.0 - rho) * state.x_hat(k) + rho * x_hat_new(k);
            next.v_hat(k) = (1.0 - rho) * state.v_hat(k) + rho * v_hat_new(k);
        }
    }
    next.dsc_error_prev = state.dsc_error_cur;
    next.iteration = state.iteration + 1;
    return next;
}

DetectionResult bpic_detect(const SystemInstance& instance, const BpicConfig& config, bool trace) {
    if (config.iterations < 1) throw std::invalid_argument("bpic_detect: need at least one iteration");
    const Constellation& omega = instance.constellation;
    const ChannelGram gram = channel_gram(instance);

    BpicState state = bpic_initial_state(instance);
    DetectionResult result;
    for (int t = 1; t <= config.iterations; ++t) {
        BpicObservation obs = bpic_observe(gram, state.x_hat, state.v_hat);
        CavityDistribution cavity = discretize_gaussian(obs.mu, obs.sigma, omega);
        auto [xh, vh] = discrete_moments(cavity, omega);
        state.mu = obs.mu;
        state.sigma = obs.sigma;
        state = bpic_dsc(xh, vh, state, gram);
        if (trace) {
            result.x_soft_trace.push_back(state.x_hat);
            result.trace.push_back({obs.mu, obs.sigma, obs.mu, obs.sigma, state.x_hat, state.v_hat});
        }
    }
    result.x_hard = hard_decision(state.x_hat, omega);
    result.iterations_run = config.iterations;
    return result;
}

}  // namespace mimo
