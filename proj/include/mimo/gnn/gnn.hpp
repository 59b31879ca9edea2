#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mimo/detect/cavity.hpp"
#include "mimo/detect/gram.hpp"
#include "mimo/gnn/params.hpp"

namespace mimo {

// Node-indexed GNN tensors are stored feature-major: column k belongs to user k.

/// Per-node runtime state carried across rounds and detector iterations.
struct GnnState {
    Eigen::MatrixXd u;  ///< N_u x K messages
    Eigen::MatrixXd g;  ///< N_h1 x K GRU hidden states
};

/// Variable-node attributes: row 0 the cavity mean, row 1 its variance (> 0).
struct NodeAttributes {
    Eigen::MatrixXd a;  ///< 2 x K
};

/// Factor attributes f_jk = [h_k^T h_j, sigma^2] and the self-potential
/// features [y^T h_k, h_k^T h_k, sigma^2] used to seed the messages.
struct EdgeAttributes {
    Eigen::MatrixXd gram;            ///< K x K, f_jk[0] = gram(k, j)
    double noise_var = 0.0;          ///< f_jk[1]
    Eigen::MatrixXd init_features;   ///< 3 x K
};

EdgeAttributes edge_attributes(const ChannelGram& gram);

/// u^(0) = W1 [y^T h_k, h_k^T h_k, sigma^2] + b1 and g^(0) = 0.
GnnState gnn_init(const EdgeAttributes& edges, const GnnParams& params);

/// Cached intermediates of one message-passing round.
struct RoundTape {
    Eigen::MatrixXd u_in, g_in;
    Eigen::MatrixXd z1, h1, z2, h2;  ///< factor MLP, one column per directed edge
    Eigen::MatrixXd x;               ///< GRU input [aggregate; attributes]
    Eigen::MatrixXd reset, update, cand, gh_cand;
    Eigen::MatrixXd g_out;
};

/// Cached intermediates of the readout.
struct ReadoutTape {
    Eigen::MatrixXd u;
    Eigen::MatrixXd z1, h1, z2, h2;
    CavityDistribution cavity;
};

/// One synchronous round: every node reads the same pre-round state.
/// Incoming factor messages are summed in ascending sender order.  With a
/// single user the aggregate is the zero vector.
GnnState gnn_round(const GnnState& state, const NodeAttributes& attrs, const EdgeAttributes& edges,
                   const GnnParams& params, RoundTape* tape = nullptr);

/// Readout MLP and row-wise softmax.
CavityDistribution gnn_readout(const GnnState& state, const GnnParams& params, ReadoutTape* tape = nullptr);

/// Everything a single gnn_forward call needs to be differentiated.
struct ForwardTape {
    std::vector<RoundTape> rounds;
    ReadoutTape readout;
    bool recorded = false;
};

struct ForwardResult {
    CavityDistribution cavity;
    GnnState state;
};

/// `rounds` message-passing rounds (default params.dims.rounds) followed by
/// the readout.  The returned state is the post-round (u, g), which seeds the
/// next detector iteration.
ForwardResult gnn_forward(const NodeAttributes& attrs, const EdgeAttributes& edges, const GnnState& state,
                          const GnnParams& params, ForwardTape* tape = nullptr, int rounds = -1);

/// Gradients arriving at the outputs of gnn_forward.  Empty matrices are
/// treated as zero.
struct GnnUpstream {
    Eigen::MatrixXd d_logits;  ///< K x M, gradient w.r.t. the readout logits
    Eigen::MatrixXd d_u;       ///< N_u x K, gradient w.r.t. the carried message
    Eigen::MatrixXd d_g;       ///< N_h1 x K, gradient w.r.t. the carried hidden state
};

struct GnnDownstream {
    Eigen::MatrixXd d_attrs;  ///< 2 x K
    Eigen::MatrixXd d_u;      ///< N_u x K, w.r.t. the incoming state
    Eigen::MatrixXd d_g;      ///< N_h1 x K
};

/// Reverse pass of gnn_forward.  Parameter gradients are accumulated into
/// `d_params`.  Throws std::logic_error if `tape` was not recorded.
GnnDownstream gnn_backward(const ForwardTape& tape, const GnnUpstream& upstream, const EdgeAttributes& edges,
                           const GnnParams& params, GnnParams& d_params);

/// Reverse pass of gnn_init (accumulates into d_params.init).
void gnn_init_backward(const EdgeAttributes& edges, const Eigen::MatrixXd& d_u0, GnnParams& d_params);

/// Gradient w.r.t. logits given the gradient w.r.t. softmax probabilities.
Eigen::MatrixXd softmax_backward(const Eigen::MatrixXd& q, const Eigen::MatrixXd& d_q);

}  // namespace mimo
