#include "moments.hpp"

#include <algorithm>

#include "mimo/detect/cavity.hpp"

namespace mimo::detail {

Moments cavity_moments(const Eigen::MatrixXd& q, const std::vector<double>& alphabet) {
    const Eigen::Index k_users = q.rows();
    const auto m = static_cast<Eigen::Index>(alphabet.size());
    Moments out;
    out.x.resize(k_users);
    out.v.resize(k_users);
    out.v_raw.resize(k_users);
    for (Eigen::Index k = 0; k < k_users; ++k) {
        double mean = 0.0;
        for (Eigen::Index a = 0; a < m; ++a) mean += alphabet[static_cast<std::size_t>(a)] * q(k, a);
        double var = 0.0;
        for (Eigen::Index a = 0; a < m; ++a) {
            const double d = alphabet[static_cast<std::size_t>(a)] - mean;
            var += d * d * q(k, a);
        }
        out.x(k) = mean;
        out.v_raw(k) = var;
        out.v(k) = std::max(var, kVarianceFloor);
    }
    return out;
}

Eigen::MatrixXd moments_backward(const Eigen::MatrixXd& q, const std::vector<double>& alphabet, const Moments& m,
                                 const Eigen::VectorXd& d_x, const Eigen::VectorXd& d_v) {
    const Eigen::Index k_users = q.rows();
    const auto n = static_cast<Eigen::Index>(alphabet.size());
    Eigen::MatrixXd d_q(k_users, n);
    for (Eigen::Index k = 0; k < k_users; ++k) {
        const double dv = m.v_raw(k) > kVarianceFloor ? d_v(k) : 0.0;
        double centred = 0.0;
        for (Eigen::Index a = 0; a < n; ++a) centred += (alphabet[static_cast<std::size_t>(a)] - m.x(k)) * q(k, a);
        const double dx = d_x(k) - 2.0 * dv * centred;
        for (Eigen::Index a = 0; a < n; ++a) {
            const double s = alphabet[static_cast<std::size_t>(a)];
            d_q(k, a) = dx * s + dv * (s - m.x(k)) * (s - m.x(k));
        }
    }
    return d_q;
}

}  // namespace mimo::detail
