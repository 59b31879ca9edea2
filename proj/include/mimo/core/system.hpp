#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mimo/core/constellation.hpp"
#include "mimo/core/rng.hpp"

namespace mimo {

/// One channel use of the real-valued model y = H x + n.
///
/// Columns of `h` are users (K = 2 Nt), rows are receive dimensions (N = 2 Nr).
/// `noise_var` is the per-real-dimension variance sigma^2.
struct SystemInstance {
    Eigen::MatrixXd h;
    Eigen::VectorXd x_true;
    Eigen::VectorXd y;
    Eigen::VectorXd n;
    double noise_var = 0.0;
    int n_tx = 0;
    int n_rx = 0;
    Constellation constellation;

    int users() const { return static_cast<int>(h.cols()); }
    int dims() const { return static_cast<int>(h.rows()); }
};

/// [[Re, -Im], [Im, Re]] block form of a complex channel.
Eigen::MatrixXd lift_complex_to_real(const Eigen::MatrixXcd& h_complex);
/// [Re; Im] stacking of a complex vector.
Eigen::VectorXd lift_vector(const Eigen::VectorXcd& v);

/// Complex noise variance for a given SNR, assuming unit-energy symbols and
/// channel entries of variance 1/Nr.  The real model uses half of this.
double snr_to_noise_var(double snr_db, int n_tx, int n_rx);

/// Rayleigh channel, uniform symbols and AWGN drawn from `rng`.
SystemInstance sample_instance(int n_tx, int n_rx, const Constellation& constellation, double snr_db,
                               RngStream& rng);

/// Builds an instance from explicit parts; y is formed as h x + n.
SystemInstance make_instance(Eigen::MatrixXd h, Eigen::VectorXd x_true, Eigen::VectorXd n, double noise_var,
                             const Constellation& constellation);

/// Relabels users: column k of the result is column perm[k] of the input, and
/// x_true is permuted the same way.  y and n are unchanged.
SystemInstance permute_users(const SystemInstance& instance, std::span<const int> perm);

/// Number of complex symbols decided wrongly.  Real dimensions k and k + Nt
/// form one complex symbol; when K is odd (custom instances) every real
/// dimension is counted as its own symbol.
int count_symbol_errors(const SystemInstance& instance, const Eigen::VectorXd& x_hard);
/// Number of complex symbols carried by the instance (see count_symbol_errors).
int symbols_per_instance(const SystemInstance& instance);

/// ||y - H x||^2.
double ml_objective(const SystemInstance& instance, const Eigen::VectorXd& x);

}  // namespace mimo
