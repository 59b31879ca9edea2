#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include <Eigen/Dense>

namespace mimo {

/// Layer sizes of the cavity-refinement GNN.
struct GnnDims {
    int message = 8;    ///< N_u, also the GRU input width minus the 2 attribute slots
    int hidden1 = 64;   ///< N_h1, also the GRU hidden size
    int hidden2 = 32;   ///< N_h2
    int rounds = 2;     ///< L message-passing rounds per detector iteration
    int alphabet = 2;   ///< M, readout width

    bool operator==(const GnnDims&) const = default;
};

/// Dense layer y = w x + b; b is stored as a column.
struct Affine {
    Eigen::MatrixXd w;
    Eigen::MatrixXd b;
};

/// All learnable tensors.  Shapes depend only on GnnDims, never on K or N.
///
/// The GRU follows the usual reset/update/candidate gating with separate
/// input and hidden biases; the three gate blocks are stacked row-wise in
/// the order [reset; update; candidate].
struct GnnParams {
    GnnDims dims;
    Affine init;                     ///< [y^T h_k, h_k^T h_k, sigma^2] -> N_u
    Affine factor1, factor2, factor3;  ///< [u_k, u_j, f_jk] -> N_h1 -> N_h2 -> N_u
    Eigen::MatrixXd gru_wi, gru_wh;  ///< 3 N_h1 x (N_u + 2), 3 N_h1 x N_h1
    Eigen::MatrixXd gru_bi, gru_bh;  ///< 3 N_h1 x 1
    Affine output;                   ///< g_k -> u_k
    Affine readout1, readout2, readout3;  ///< N_u -> N_h1 -> N_h2 -> M

    /// Zero tensors of the right shapes (used for gradients and moments).
    static GnnParams zeros(const GnnDims& dims);
    /// Uniform fan-in scaled weights (variance 1/fan_in), zero biases.
    static GnnParams random(const GnnDims& dims, std::uint64_t seed);

    std::size_t parameter_count() const;

    /// Visits every tensor in a fixed order with a stable name.
    void for_each(const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn);
    void for_each(const std::function<void(const std::string&, const Eigen::MatrixXd&)>& fn) const;

    GnnParams& operator+=(const GnnParams& other);
    GnnParams& operator*=(double s);
    double squared_norm() const;
    bool all_finite() const;
};

/// Visits matching tensors of two parameter sets in lockstep.
void zip_tensors(GnnParams& a, const GnnParams& b,
                 const std::function<void(Eigen::MatrixXd&, const Eigen::MatrixXd&)>& fn);

}  // namespace mimo
