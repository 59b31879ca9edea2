#include <algorithm>
#include <stdexcept>

#include "mimo/neural/neural.hpp"
#include "moments.hpp"

namespace mimo {

namespace {

void check_alphabet(const GnnParams& params, const Constellation& omega, const char* who) {
    if (params.dims.alphabet != omega.size())
        throw std::invalid_argument(std::string(who) + ": GNN alphabet size does not match the constellation");
}

}  // namespace

NeuralResult gepnet_forward(const SystemInstance& instance, const GnnParams& params, const GepnetConfig& config,
                            GepnetTape* tape, bool trace) {
    if (config.iterations < 1) throw std::invalid_argument("gepnet: need at least one iteration");
    if (!(config.eta >= 0.0 && config.eta < 1.0)) throw std::invalid_argument("gepnet: eta must lie in [0, 1)");
    const bool use_gnn = config.cavity == CavitySource::Gnn;
    if (tape && !use_gnn) throw std::invalid_argument("gepnet: a tape needs the GNN cavity");
    const Constellation& omega = instance.constellation;
    if (use_gnn) check_alphabet(params, omega, "gepnet");

    const Eigen::Index k_users = instance.users();
    const ChannelGram gram = channel_gram(instance);
    const EdgeAttributes edges = edge_attributes(gram);

    Eigen::VectorXd gamma = Eigen::VectorXd::Zero(k_users);
    Eigen::VectorXd lambda = Eigen::VectorXd::Constant(k_users, 1.0 / omega.es_real);
    GnnState state;
    if (use_gnn) state = gnn_init(edges, params);

    if (tape) {
        tape->edges = edges;
        tape->steps.clear();
        tape->steps.reserve(static_cast<std::size_t>(config.iterations));
        tape->eta = config.eta;
        tape->alphabet = omega.real_points;
    }

    NeuralResult out;
    Eigen::VectorXd x_hat;
    for (int t = 1; t <= config.iterations; ++t) {
        EpObservation obs = ep_observe(gram, gamma, lambda, tape != nullptr);

        CavityDistribution cavity;
        GepnetStep* step = nullptr;
        if (tape) {
            step = &tape->steps.emplace_back();
            step->gamma_prev = gamma;
            step->lambda_prev = lambda;
            step->denom = (1.0 - obs.sigma_post.array() * lambda.array()).matrix();
        }
        if (use_gnn) {
            NodeAttributes attrs;
            attrs.a.resize(2, k_users);
            attrs.a.row(0) = obs.x_obs.transpose();
            attrs.a.row(1) = obs.v_obs.transpose();
            ForwardResult fr = gnn_forward(attrs, edges, state, params, step ? &step->gnn : nullptr, config.rounds);
            cavity = std::move(fr.cavity);
            state = std::move(fr.state);
        } else {
            cavity = discretize_gaussian(obs.x_obs, obs.v_obs, omega);
        }

        detail::Moments mom = detail::cavity_moments(cavity.q, omega.real_points);
        EpUpdate up = ep_estimate(mom.x, mom.v, obs.x_obs, obs.v_obs, gamma, lambda, config.eta);

        if (step) {
            step->sigma_full = std::move(obs.sigma_full);
            step->mu = obs.mu_post;
            step->x_obs = obs.x_obs;
            step->v_obs = obs.v_obs;
            step->q = cavity.q;
            step->x_hat = mom.x;
            step->v_hat = mom.v;
            step->v_raw = mom.v_raw;
            step->accepted = up.accepted;
        }
        if (trace) {
            out.detection.x_soft_trace.push_back(mom.x);
            out.detection.trace.push_back({obs.x_obs, obs.v_obs, obs.mu_post, obs.sigma_post, mom.x, mom.v});
            out.cavity_trace.push_back(cavity);
        }
        gamma = std::move(up.gamma);
        lambda = std::move(up.lambda);
        x_hat = std::move(mom.x);
        out.final_cavity = std::move(cavity);
    }
    out.detection.x_hard = hard_decision(x_hat, omega);
    out.detection.iterations_run = config.iterations;
    return out;
}

void gepnet_backward(const GepnetTape& tape, const Eigen::MatrixXd& d_logits, const GnnParams& params,
                     GnnParams& d_params, bool truncate_observation) {
    if (tape.steps.empty()) throw std::logic_error("gepnet_backward: empty tape");
    const Eigen::Index k_users = tape.edges.gram.rows();
    const double eta = tape.eta;

    // Gradients w.r.t. (gamma, lambda) after the estimate of the current step.
    Eigen::VectorXd d_gamma = Eigen::VectorXd::Zero(k_users);
    Eigen::VectorXd d_lambda = Eigen::VectorXd::Zero(k_users);
    Eigen::MatrixXd d_u, d_g;

    for (auto t = static_cast<std::ptrdiff_t>(tape.steps.size()) - 1; t >= 0; --t) {
        const GepnetStep& st = tape.steps[static_cast<std::size_t>(t)];

        Eigen::VectorXd d_gamma_prev = eta * d_gamma;
        Eigen::VectorXd d_lambda_prev = eta * d_lambda;
        Eigen::VectorXd d_x_hat = Eigen::VectorXd::Zero(k_users);
        Eigen::VectorXd d_v_hat = Eigen::VectorXd::Zero(k_users);
        Eigen::VectorXd d_x_obs = Eigen::VectorXd::Zero(k_users);
        Eigen::VectorXd d_v_obs = Eigen::VectorXd::Zero(k_users);
        for (Eigen::Index k = 0; k < k_users; ++k) {
            const double dl = (1.0 - eta) * d_lambda(k);
            const double dg = (1.0 - eta) * d_gamma(k);
            if (st.accepted(k) > 0.5) {
                const double v = st.v_hat(k);
                const double vo = st.v_obs(k);
                d_v_hat(k) = -(dl + dg * st.x_hat(k)) / (v * v);
                d_x_hat(k) = dg / v;
                d_v_obs(k) = (dl + dg * st.x_obs(k)) / (vo * vo);
                d_x_obs(k) = -dg / vo;
            } else {
                d_lambda_prev(k) += dl;
                d_gamma_prev(k) += dg;
            }
        }

        const detail::Moments mom{st.x_hat, st.v_hat, st.v_raw};
        const Eigen::MatrixXd d_q = detail::moments_backward(st.q, tape.alphabet, mom, d_x_hat, d_v_hat);
        Eigen::MatrixXd d_log = softmax_backward(st.q, d_q);
        if (t == static_cast<std::ptrdiff_t>(tape.steps.size()) - 1) d_log += d_logits;

        GnnDownstream down = gnn_backward(st.gnn, {d_log, d_u, d_g}, tape.edges, params, d_params);
        d_x_obs += down.d_attrs.row(0).transpose();
        d_v_obs += down.d_attrs.row(1).transpose();
        if (t == 0) {
            gnn_init_backward(tape.edges, down.d_u, d_params);
        } else {
            d_u = std::move(down.d_u);
            d_g = std::move(down.d_g);
        }

        if (!truncate_observation) {
            Eigen::VectorXd d_mu(k_users);
            Eigen::VectorXd d_sigma = Eigen::VectorXd::Zero(k_users);
            for (Eigen::Index k = 0; k < k_users; ++k) {
                const double s = st.sigma_full(k, k);
                const double vo = st.v_obs(k);
                const double dvo = d_v_obs(k) + d_x_obs(k) * (st.mu(k) / s - st.gamma_prev(k));
                d_mu(k) = d_x_obs(k) * vo / s;
                d_sigma(k) = -d_x_obs(k) * vo * st.mu(k) / (s * s);
                d_gamma_prev(k) -= d_x_obs(k) * vo;
                const double denom = st.denom(k);
                if (s / std::max(denom, kVarianceFloor) <= kVarianceFloor) continue;
                if (denom > kVarianceFloor) {
                    d_sigma(k) += dvo / (denom * denom);
                    d_lambda_prev(k) += dvo * s * s / (denom * denom);
                } else {
                    d_sigma(k) += dvo / kVarianceFloor;
                }
            }
            const Eigen::VectorXd w = st.sigma_full * d_mu;
            d_gamma_prev += w;
            const Eigen::VectorXd sq = st.sigma_full.array().square().matrix().transpose() * d_sigma;
            d_lambda_prev -= (w.array() * st.mu.array()).matrix() + sq;
        }
        d_gamma = std::move(d_gamma_prev);
        d_lambda = std::move(d_lambda_prev);
    }
}

}  // namespace mimo
