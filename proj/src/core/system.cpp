#include "mimo/core/system.hpp"

#include <cmath>
#include <stdexcept>

namespace mimo {

Eigen::MatrixXd lift_complex_to_real(const Eigen::MatrixXcd& h_complex) {
    const Eigen::Index nr = h_complex.rows();
    const Eigen::Index nt = h_complex.cols();
    Eigen::MatrixXd out(2 * nr, 2 * nt);
    out.topLeftCorner(nr, nt) = h_complex.real();
    out.topRightCorner(nr, nt) = -h_complex.imag();
    out.bottomLeftCorner(nr, nt) = h_complex.imag();
    out.bottomRightCorner(nr, nt) = h_complex.real();
    return out;
}

Eigen::VectorXd lift_vector(const Eigen::VectorXcd& v) {
    Eigen::VectorXd out(2 * v.size());
    out.head(v.size()) = v.real();
    out.tail(v.size()) = v.imag();
    return out;
}

double snr_to_noise_var(double snr_db, int n_tx, int n_rx) {
    if (n_tx < 1 || n_rx < n_tx) throw std::invalid_argument("snr_to_noise_var: need n_rx >= n_tx >= 1");
    return static_cast<double>(n_tx) / (static_cast<double>(n_rx) * std::pow(10.0, snr_db / 10.0));
}

SystemInstance sample_instance(int n_tx, int n_rx, const Constellation& constellation, double snr_db,
                               RngStream& rng) {
    const double noise_var_complex = snr_to_noise_var(snr_db, n_tx, n_rx);
    const double h_std = std::sqrt(0.5 / n_rx);
    const double n_std = std::sqrt(0.5 * noise_var_complex);

    Eigen::MatrixXcd hc(n_rx, n_tx);
    for (int j = 0; j < n_tx; ++j)
        for (int i = 0; i < n_rx; ++i) {
            double re = rng.normal() * h_std;
            double im = rng.normal() * h_std;
            hc(i, j) = {re, im};
        }

    const auto m = static_cast<std::size_t>(constellation.size());
    Eigen::VectorXd x(2 * n_tx);
    for (int k = 0; k < 2 * n_tx; ++k) x(k) = constellation.real_points[rng.index(m)];

    Eigen::VectorXd n(2 * n_rx);
    for (int i = 0; i < 2 * n_rx; ++i) n(i) = rng.normal() * n_std;

    SystemInstance inst = make_instance(lift_complex_to_real(hc), std::move(x), std::move(n),
                                        0.5 * noise_var_complex, constellation);
    inst.n_tx = n_tx;
    inst.n_rx = n_rx;
    return inst;
}

SystemInstance make_instance(Eigen::MatrixXd h, Eigen::VectorXd x_true, Eigen::VectorXd n, double noise_var,
                             const Constellation& constellation) {
    if (h.cols() != x_true.size() || h.rows() != n.size())
        throw std::invalid_argument("make_instance: dimension mismatch");
    SystemInstance inst;
    inst.y = h * x_true + n;
    inst.h = std::move(h);
    inst.x_true = std::move(x_true);
    inst.n = std::move(n);
    inst.noise_var = noise_var;
    inst.n_tx = static_cast<int>((inst.h.cols() + 1) / 2);
    inst.n_rx = static_cast<int>((inst.h.rows() + 1) / 2);
    inst.constellation = constellation;
    return inst;
}

SystemInstance permute_users(const SystemInstance& instance, std::span<const int> perm) {
    const int k = instance.users();
    if (static_cast<int>(perm.size()) != k) throw std::invalid_argument("permute_users: wrong permutation size");
    SystemInstance out = instance;
    for (int i = 0; i < k; ++i) {
        out.h.col(i) = instance.h.col(perm[static_cast<std::size_t>(i)]);
        out.x_true(i) = instance.x_true(perm[static_cast<std::size_t>(i)]);
    }
    return out;
}

int symbols_per_instance(const SystemInstance& instance) {
    const int k = instance.users();
    return (2 * instance.n_tx == k) ? instance.n_tx : k;
}

int count_symbol_errors(const SystemInstance& instance, const Eigen::VectorXd& x_hard) {
    const int k = instance.users();
    int errors = 0;
    if (2 * instance.n_tx == k) {
        const int nt = instance.n_tx;
        for (int i = 0; i < nt; ++i)
            if (x_hard(i) != instance.x_true(i) || x_hard(i + nt) != instance.x_true(i + nt)) ++errors;
    } else {
        for (int i = 0; i < k; ++i)
            if (x_hard(i) != instance.x_true(i)) ++errors;
    }
    return errors;
}

double ml_objective(const SystemInstance& instance, const Eigen::VectorXd& x) {
    return (instance.y - instance.h * x).squaredNorm();
}

}  // namespace mimo
