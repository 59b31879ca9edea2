#include "mimo/gnn/gnn.hpp"

#include <stdexcept>

namespace mimo {

namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& x) {
    return (1.0 + (-x.array()).exp()).inverse().matrix();
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& x) { return x.cwiseMax(0.0); }

Eigen::MatrixXd relu_mask(const Eigen::MatrixXd& z, const Eigen::MatrixXd& d) {
    return (z.array() > 0.0).select(d.array(), 0.0).matrix();
}

Eigen::MatrixXd affine(const Affine& layer, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd out = layer.w * x;
    out.colwise() += layer.b.col(0);
    return out;
}

void affine_backward(const Affine& layer, Affine& d_layer, const Eigen::MatrixXd& x, const Eigen::MatrixXd& d_out,
                     Eigen::MatrixXd* d_x) {
    d_layer.w.noalias() += d_out * x.transpose();
    d_layer.b.col(0) += d_out.rowwise().sum();
    *d_x = layer.w.transpose() * d_out;
}

Eigen::MatrixXd or_zero(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols) {
    if (m.size() == 0) return Eigen::MatrixXd::Zero(rows, cols);
    return m;
}

}  // namespace

EdgeAttributes edge_attributes(const ChannelGram& gram) {
    const Eigen::Index k_users = gram.gram.rows();
    EdgeAttributes e;
    e.gram = gram.gram;
    e.noise_var = gram.noise_var;
    e.init_features.resize(3, k_users);
    e.init_features.row(0) = gram.hty.transpose();
    e.init_features.row(1) = gram.gram.diagonal().transpose();
    e.init_features.row(2).setConstant(gram.noise_var);
    return e;
}

GnnState gnn_init(const EdgeAttributes& edges, const GnnParams& params) {
    GnnState s;
    s.u = affine(params.init, edges.init_features);
    s.g = Eigen::MatrixXd::Zero(params.dims.hidden1, edges.init_features.cols());
    return s;
}

void gnn_init_backward(const EdgeAttributes& edges, const Eigen::MatrixXd& d_u0, GnnParams& d_params) {
    d_params.init.w.noalias() += d_u0 * edges.init_features.transpose();
    d_params.init.b.col(0) += d_u0.rowwise().sum();
}

GnnState gnn_round(const GnnState& state, const NodeAttributes& attrs, const EdgeAttributes& edges,
                   const GnnParams& params, RoundTape* tape) {
    const GnnDims& d = params.dims;
    const Eigen::Index k_users = state.u.cols();
    const Eigen::Index n_edges = k_users * (k_users - 1);
    const Eigen::MatrixXd& f1 = params.factor1.w;

    // The first factor layer splits over its concatenated input, so the
    // per-node parts are computed once instead of once per edge.
    const Eigen::MatrixXd recv = f1.leftCols(d.message) * state.u;
    const Eigen::MatrixXd send = f1.middleCols(d.message, d.message) * state.u;
    const Eigen::VectorXd w_gram = f1.col(2 * d.message);
    const Eigen::VectorXd base = f1.col(2 * d.message + 1) * edges.noise_var + params.factor1.b.col(0);

    Eigen::MatrixXd z1(d.hidden1, n_edges);
    Eigen::Index e = 0;
    for (Eigen::Index k = 0; k < k_users; ++k)
        for (Eigen::Index j = 0; j < k_users; ++j) {
            if (j == k) continue;
            z1.col(e++) = recv.col(k) + send.col(j) + w_gram * edges.gram(k, j) + base;
        }
    Eigen::MatrixXd h1 = relu(z1);
    Eigen::MatrixXd z2 = affine(params.factor2, h1);
    Eigen::MatrixXd h2 = relu(z2);
    const Eigen::MatrixXd msg = affine(params.factor3, h2);

    Eigen::MatrixXd x(d.message + 2, k_users);
    x.setZero();
    e = 0;
    for (Eigen::Index k = 0; k < k_users; ++k)
        for (Eigen::Index j = 0; j < k_users; ++j) {
            if (j == k) continue;
            x.col(k).head(d.message) += msg.col(e++);
        }
    x.bottomRows(2) = attrs.a;

    const int hs = d.hidden1;
    Eigen::MatrixXd gi = params.gru_wi * x;
    gi.colwise() += params.gru_bi.col(0);
    Eigen::MatrixXd gh = params.gru_wh * state.g;
    gh.colwise() += params.gru_bh.col(0);

    Eigen::MatrixXd reset = sigmoid(gi.topRows(hs) + gh.topRows(hs));
    Eigen::MatrixXd update = sigmoid(gi.middleRows(hs, hs) + gh.middleRows(hs, hs));
    Eigen::MatrixXd gh_cand = gh.bottomRows(hs);
    Eigen::MatrixXd cand = (gi.bottomRows(hs).array() + reset.array() * gh_cand.array()).tanh().matrix();

    GnnState out;
    out.g = ((1.0 - update.array()) * cand.array() + update.array() * state.g.array()).matrix();
    out.u = affine(params.output, out.g);

    if (tape) {
        tape->u_in = state.u;
        tape->g_in = state.g;
        tape->z1 = std::move(z1);
        tape->h1 = std::move(h1);
        tape->z2 = std::move(z2);
        tape->h2 = std::move(h2);
        tape->x = std::move(x);
        tape->reset = std::move(reset);
        tape->update = std::move(update);
        tape->cand = std::move(cand);
        tape->gh_cand = std::move(gh_cand);
        tape->g_out = out.g;
    }
    return out;
}

CavityDistribution gnn_readout(const GnnState& state, const GnnParams& params, ReadoutTape* tape) {
    Eigen::MatrixXd z1 = affine(params.readout1, state.u);
    Eigen::MatrixXd h1 = relu(z1);
    Eigen::MatrixXd z2 = affine(params.readout2, h1);
    Eigen::MatrixXd h2 = relu(z2);
    CavityDistribution cav;
    cav.logits = affine(params.readout3, h2).transpose();
    cav.q = softmax_rows(cav.logits);
    if (tape) {
        tape->u = state.u;
        tape->z1 = std::move(z1);
        tape->h1 = std::move(h1);
        tape->z2 = std::move(z2);
        tape->h2 = std::move(h2);
        tape->cavity = cav;
    }
    return cav;
}

ForwardResult gnn_forward(const NodeAttributes& attrs, const EdgeAttributes& edges, const GnnState& state,
                          const GnnParams& params, ForwardTape* tape, int rounds) {
    if (rounds < 0) rounds = params.dims.rounds;
    GnnState s = state;
    if (tape) {
        tape->rounds.assign(static_cast<std::size_t>(rounds), RoundTape{});
        tape->recorded = true;
    }
    for (int l = 0; l < rounds; ++l)
        s = gnn_round(s, attrs, edges, params, tape ? &tape->rounds[static_cast<std::size_t>(l)] : nullptr);
    ForwardResult r;
    r.cavity = gnn_readout(s, params, tape ? &tape->readout : nullptr);
    r.state = std::move(s);
    return r;
}

Eigen::MatrixXd softmax_backward(const Eigen::MatrixXd& q, const Eigen::MatrixXd& d_q) {
    Eigen::MatrixXd out(q.rows(), q.cols());
    for (Eigen::Index k = 0; k < q.rows(); ++k) {
        const double inner = q.row(k).dot(d_q.row(k));
        out.row(k) = (q.row(k).array() * (d_q.row(k).array() - inner)).matrix();
    }
    return out;
}

namespace {

/// Backward of one round; returns gradients w.r.t. the round's (u_in, g_in)
/// and accumulates the attribute gradient.
GnnState round_backward(const RoundTape& t, const Eigen::MatrixXd& d_u_out, const Eigen::MatrixXd& d_g_out_in,
                        const EdgeAttributes& edges, const GnnParams& params, GnnParams& dp,
                        Eigen::MatrixXd& d_attrs) {
    const GnnDims& d = params.dims;
    const int hs = d.hidden1;
    const Eigen::Index k_users = t.u_in.cols();

    Eigen::MatrixXd d_g_out;
    affine_backward(params.output, dp.output, t.g_out, d_u_out, &d_g_out);
    d_g_out += d_g_out_in;

    // g' = (1 - z) n + z g
    const Eigen::ArrayXXd z = t.update.array();
    const Eigen::ArrayXXd n = t.cand.array();
    const Eigen::ArrayXXd r = t.reset.array();
    const Eigen::ArrayXXd dgo = d_g_out.array();
    const Eigen::ArrayXXd d_pre_n = dgo * (1.0 - z) * (1.0 - n * n);
    const Eigen::ArrayXXd d_pre_z = dgo * (t.g_in.array() - n) * z * (1.0 - z);
    const Eigen::ArrayXXd d_pre_r = d_pre_n * t.gh_cand.array() * r * (1.0 - r);

    Eigen::MatrixXd d_gi(3 * hs, k_users);
    d_gi.topRows(hs) = d_pre_r.matrix();
    d_gi.middleRows(hs, hs) = d_pre_z.matrix();
    d_gi.bottomRows(hs) = d_pre_n.matrix();
    Eigen::MatrixXd d_gh = d_gi;
    d_gh.bottomRows(hs) = (d_pre_n * r).matrix();

    dp.gru_wi.noalias() += d_gi * t.x.transpose();
    dp.gru_bi.col(0) += d_gi.rowwise().sum();
    dp.gru_wh.noalias() += d_gh * t.g_in.transpose();
    dp.gru_bh.col(0) += d_gh.rowwise().sum();

    GnnState d_in;
    d_in.g = (dgo * z).matrix();
    d_in.g.noalias() += params.gru_wh.transpose() * d_gh;
    const Eigen::MatrixXd d_x = params.gru_wi.transpose() * d_gi;
    d_attrs += d_x.bottomRows(2);

    // Scatter the aggregate gradient back to each edge message.
    const Eigen::Index n_edges = t.z1.cols();
    Eigen::MatrixXd d_msg(d.message, n_edges);
    Eigen::Index e = 0;
    for (Eigen::Index k = 0; k < k_users; ++k)
        for (Eigen::Index j = 0; j < k_users; ++j) {
            if (j == k) continue;
            d_msg.col(e++) = d_x.col(k).head(d.message);
        }

    Eigen::MatrixXd d_h2;
    affine_backward(params.factor3, dp.factor3, t.h2, d_msg, &d_h2);
    const Eigen::MatrixXd d_z2 = relu_mask(t.z2, d_h2);
    Eigen::MatrixXd d_h1;
    affine_backward(params.factor2, dp.factor2, t.h1, d_z2, &d_h1);
    const Eigen::MatrixXd d_z1 = relu_mask(t.z1, d_h1);

    Eigen::MatrixXd d_recv = Eigen::MatrixXd::Zero(hs, k_users);
    Eigen::MatrixXd d_send = Eigen::MatrixXd::Zero(hs, k_users);
    Eigen::VectorXd d_w_gram = Eigen::VectorXd::Zero(hs);
    e = 0;
    for (Eigen::Index k = 0; k < k_users; ++k)
        for (Eigen::Index j = 0; j < k_users; ++j) {
            if (j == k) continue;
            d_recv.col(k) += d_z1.col(e);
            d_send.col(j) += d_z1.col(e);
            d_w_gram += d_z1.col(e) * edges.gram(k, j);
            ++e;
        }
    const Eigen::VectorXd d_base = d_z1.rowwise().sum();
    dp.factor1.w.leftCols(d.message).noalias() += d_recv * t.u_in.transpose();
    dp.factor1.w.middleCols(d.message, d.message).noalias() += d_send * t.u_in.transpose();
    dp.factor1.w.col(2 * d.message) += d_w_gram;
    dp.factor1.w.col(2 * d.message + 1) += d_base * edges.noise_var;
    dp.factor1.b.col(0) += d_base;

    const Eigen::MatrixXd& f1 = params.factor1.w;
    d_in.u.noalias() = f1.leftCols(d.message).transpose() * d_recv;
    d_in.u.noalias() += f1.middleCols(d.message, d.message).transpose() * d_send;
    return d_in;
}

}  // namespace

GnnDownstream gnn_backward(const ForwardTape& tape, const GnnUpstream& upstream, const EdgeAttributes& edges,
                           const GnnParams& params, GnnParams& d_params) {
    if (!tape.recorded) throw std::logic_error("gnn_backward: forward tape was not recorded");
    const GnnDims& d = params.dims;
    const ReadoutTape& rt = tape.readout;
    const Eigen::Index k_users = rt.u.cols();

    GnnDownstream out;
    out.d_attrs = Eigen::MatrixXd::Zero(2, k_users);

    // Readout.
    const Eigen::MatrixXd d_logits = or_zero(upstream.d_logits, k_users, d.alphabet).transpose();
    Eigen::MatrixXd d_h2;
    affine_backward(params.readout3, d_params.readout3, rt.h2, d_logits, &d_h2);
    Eigen::MatrixXd d_h1;
    affine_backward(params.readout2, d_params.readout2, rt.h1, relu_mask(rt.z2, d_h2), &d_h1);
    Eigen::MatrixXd d_u_readout;
    affine_backward(params.readout1, d_params.readout1, rt.u, relu_mask(rt.z1, d_h1), &d_u_readout);

    Eigen::MatrixXd d_u = or_zero(upstream.d_u, d.message, k_users) + d_u_readout;
    Eigen::MatrixXd d_g = or_zero(upstream.d_g, d.hidden1, k_users);
    for (auto it = tape.rounds.rbegin(); it != tape.rounds.rend(); ++it) {
        GnnState d_in = round_backward(*it, d_u, d_g, edges, params, d_params, out.d_attrs);
        d_u = std::move(d_in.u);
        d_g = std::move(d_in.g);
    }
    out.d_u = std::move(d_u);
    out.d_g = std::move(d_g);
    return out;
}

}  // namespace mimo
