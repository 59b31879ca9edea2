#include <stdexcept>

#include "mimo/detect/bpic.hpp"
#include "mimo/neural/neural.hpp"
#include "moments.hpp"

namespace mimo {

NeuralResult gpicnet_forward(const SystemInstance& instance, const GnnParams& params, const GpicnetConfig& config,
                             GpicnetTape* tape, bool trace) {
    if (config.iterations < 1) throw std::invalid_argument("gpicnet: need at least one iteration");
    const bool use_gnn = config.cavity == CavitySource::Gnn;
    if (tape && !use_gnn) throw std::invalid_argument("gpicnet: a tape needs the GNN cavity");
    const Constellation& omega = instance.constellation;
    if (use_gnn && params.dims.alphabet != omega.size())
        throw std::invalid_argument("gpicnet: GNN alphabet size does not match the constellation");

    const Eigen::Index k_users = instance.users();
    const ChannelGram gram = channel_gram(instance);
    const EdgeAttributes edges = edge_attributes(gram);
    const Eigen::VectorXd g_diag = gram.gram.diagonal();

    BpicState bp = bpic_initial_state(instance);
    GnnState state;
    if (use_gnn) state = gnn_init(edges, params);

    if (tape) {
        tape->edges = edges;
        tape->hty = gram.hty;
        tape->steps.clear();
        tape->steps.reserve(static_cast<std::size_t>(config.iterations));
        tape->alphabet = omega.real_points;
    }

    NeuralResult out;
    for (int t = 1; t <= config.iterations; ++t) {
        BpicObservation obs = bpic_observe(gram, bp.x_hat, bp.v_hat);

        GpicnetStep* step = nullptr;
        if (tape) {
            step = &tape->steps.emplace_back();
            step->x_prev = bp.x_hat;
            step->v_prev = bp.v_hat;
            step->mu = obs.mu;
            step->sigma = obs.sigma;
            // Unfloored variance, only needed to know where the floor was active.
            const Eigen::VectorXd leak = gram.gram.array().square().matrix() * bp.v_hat;
            step->sigma_raw = ((leak.array() - g_diag.array().square() * bp.v_hat.array() +
                                g_diag.array() * gram.noise_var) /
                               g_diag.array().square())
                                  .matrix();
        }

        CavityDistribution cavity;
        if (use_gnn) {
            NodeAttributes attrs;
            attrs.a.resize(2, k_users);
            attrs.a.row(0) = obs.mu.transpose();
            attrs.a.row(1) = obs.sigma.transpose();
            ForwardResult fr = gnn_forward(attrs, edges, state, params, step ? &step->gnn : nullptr, config.rounds);
            cavity = std::move(fr.cavity);
            state = std::move(fr.state);
        } else {
            cavity = discretize_gaussian(obs.mu, obs.sigma, omega);
        }

        detail::Moments mom = detail::cavity_moments(cavity.q, omega.real_points);
        bp.mu = obs.mu;
        bp.sigma = obs.sigma;
        BpicState next = bpic_dsc(mom.x, mom.v, bp, gram);

        if (step) {
            step->q = cavity.q;
            step->x_new = mom.x;
            step->v_new = mom.v;
            step->v_raw = mom.v_raw;
            step->residual = gram.hty - gram.gram * mom.x;
            step->err_prev = bp.dsc_error_cur;
            step->err_cur = next.dsc_error_cur;
            step->rho = next.rho;
        }
        bp = std::move(next);
        if (trace) {
            out.detection.x_soft_trace.push_back(bp.x_hat);
            out.detection.trace.push_back({obs.mu, obs.sigma, obs.mu, obs.sigma, bp.x_hat, bp.v_hat});
            out.cavity_trace.push_back(cavity);
        }
        out.final_cavity = std::move(cavity);
    }
    out.detection.x_hard = hard_decision(bp.x_hat, omega);
    out.detection.iterations_run = config.iterations;
    return out;
}

void gpicnet_backward(const GpicnetTape& tape, const Eigen::MatrixXd& d_logits, const GnnParams& params,
                      GnnParams& d_params, bool truncate_observation) {
    if (tape.steps.empty()) throw std::logic_error("gpicnet_backward: empty tape");
    const Eigen::MatrixXd& gram = tape.edges.gram;
    const Eigen::Index k_users = gram.rows();
    const Eigen::ArrayXd g_diag = gram.diagonal().array();

    // Gradients w.r.t. the combined estimates and the DSC error of the current step.
    Eigen::VectorXd d_x = Eigen::VectorXd::Zero(k_users);
    Eigen::VectorXd d_v = Eigen::VectorXd::Zero(k_users);
    Eigen::VectorXd d_err = Eigen::VectorXd::Zero(k_users);
    Eigen::MatrixXd d_u, d_g;

    const auto last = static_cast<std::ptrdiff_t>(tape.steps.size()) - 1;
    for (std::ptrdiff_t t = last; t >= 0; --t) {
        const GpicnetStep& st = tape.steps[static_cast<std::size_t>(t)];

        Eigen::VectorXd d_x_prev = Eigen::VectorXd::Zero(k_users);
        Eigen::VectorXd d_v_prev = Eigen::VectorXd::Zero(k_users);
        Eigen::VectorXd d_err_prev = Eigen::VectorXd::Zero(k_users);
        Eigen::VectorXd d_x_new(k_users), d_v_new(k_users);
        if (t == 0) {
            d_x_new = d_x;
            d_v_new = d_v;
        } else {
            for (Eigen::Index k = 0; k < k_users; ++k) {
                const double rho = st.rho(k);
                const double d_rho = d_x(k) * (st.x_new(k) - st.x_prev(k)) + d_v(k) * (st.v_new(k) - st.v_prev(k));
                d_x_prev(k) = (1.0 - rho) * d_x(k);
                d_v_prev(k) = (1.0 - rho) * d_v(k);
                d_x_new(k) = rho * d_x(k);
                d_v_new(k) = rho * d_v(k);
                const double a = st.err_prev(k);
                const double b = st.err_cur(k);
                const double s = a + b;
                if (s > 0.0) {
                    d_err_prev(k) = d_rho * b / (s * s);
                    d_err(k) -= d_rho * a / (s * s);
                }
            }
        }
        // err_k = (r_k / G_kk)^2 with r = H^T y - G x_new
        const Eigen::VectorXd d_r = (2.0 * d_err.array() * st.residual.array() / g_diag.square()).matrix();
        d_x_new -= gram * d_r;

        const detail::Moments mom{st.x_new, st.v_new, st.v_raw};
        const Eigen::MatrixXd d_q = detail::moments_backward(st.q, tape.alphabet, mom, d_x_new, d_v_new);
        Eigen::MatrixXd d_log = softmax_backward(st.q, d_q);
        if (t == last) d_log += d_logits;

        GnnDownstream down = gnn_backward(st.gnn, {d_log, d_u, d_g}, tape.edges, params, d_params);
        if (t == 0) {
            gnn_init_backward(tape.edges, down.d_u, d_params);
        } else {
            d_u = std::move(down.d_u);
            d_g = std::move(down.d_g);
            if (!truncate_observation) {
                const Eigen::ArrayXd d_mu = down.d_attrs.row(0).transpose().array();
                Eigen::ArrayXd d_sigma = down.d_attrs.row(1).transpose().array();
                for (Eigen::Index k = 0; k < k_users; ++k)
                    if (st.sigma_raw(k) <= kVarianceFloor) d_sigma(k) = 0.0;
                const Eigen::VectorXd scaled_mu = (d_mu / g_diag).matrix();
                d_x_prev += d_mu.matrix() - gram.transpose() * scaled_mu;
                const Eigen::VectorXd scaled_sigma = (d_sigma / g_diag.square()).matrix();
                d_v_prev += gram.array().square().matrix().transpose() * scaled_sigma - d_sigma.matrix();
            }
        }
        d_x = std::move(d_x_prev);
        d_v = std::move(d_v_prev);
        d_err = std::move(d_err_prev);
    }
}

}  // namespace mimo
