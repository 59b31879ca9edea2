#include "mimo/detect/linear.hpp"

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mimo/detect/cavity.hpp"
#include "mimo/detect/gram.hpp"

namespace mimo {

DetectionResult mmse_detect(const SystemInstance& instance) {
    const ChannelGram gram = channel_gram(instance);
    Eigen::MatrixXd system = gram.gram;
    system.diagonal().array() += instance.noise_var / instance.constellation.es_real;
    Eigen::VectorXd x_soft = system.llt().solve(gram.hty);
    DetectionResult r;
    r.x_hard = hard_decision(x_soft, instance.constellation);
    r.x_soft_trace.push_back(std::move(x_soft));
    r.iterations_run = 1;
    return r;
}

std::uint64_t lattice_size(int alphabet, int users) {
    std::uint64_t total = 1;
    for (int k = 0; k < users; ++k) {
        if (total > std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(alphabet))
            return std::numeric_limits<std::uint64_t>::max();
        total *= static_cast<std::uint64_t>(alphabet);
    }
    return total;
}

void enumerate_lattice(const SystemInstance& instance, std::uint64_t budget,
                       const std::function<void(const Eigen::VectorXd&, double)>& visit) {
    const int k_users = instance.users();
    const int m = instance.constellation.size();
    const std::uint64_t needed = lattice_size(m, k_users);
    if (needed > budget)
        throw std::length_error("lattice enumeration needs " + std::to_string(needed) +
                                " candidates, budget is " + std::to_string(budget));

    const auto& pts = instance.constellation.real_points;
    const ChannelGram gram = channel_gram(instance);
    const double y_energy = instance.y.squaredNorm();

    std::vector<int> digit(static_cast<std::size_t>(k_users), 0);
    std::vector<int> dir(static_cast<std::size_t>(k_users), 1);
    Eigen::VectorXd x = Eigen::VectorXd::Constant(k_users, pts.front());
    Eigen::VectorXd gx = gram.gram * x;
    double obj = y_energy - 2.0 * x.dot(gram.hty) + x.dot(gx);

    constexpr std::uint64_t kRefresh = 4096;
    std::uint64_t steps = 0;
    while (true) {
        visit(x, obj);
        // Reflected mixed-radix Gray step: move the lowest digit that can
        // still advance in its direction, reversing the exhausted ones.
        int j = 0;
        while (j < k_users) {
            const auto ju = static_cast<std::size_t>(j);
            const int next = digit[ju] + dir[ju];
            if (next >= 0 && next < m) {
                const double delta = pts[static_cast<std::size_t>(next)] - pts[static_cast<std::size_t>(digit[ju])];
                digit[ju] = next;
                x(j) = pts[static_cast<std::size_t>(next)];
                obj += delta * (2.0 * gx(j) - 2.0 * gram.hty(j)) + delta * delta * gram.gram(j, j);
                gx += delta * gram.gram.col(j);
                break;
            }
            dir[ju] = -dir[ju];
            ++j;
        }
        if (j == k_users) break;
        if (++steps % kRefresh == 0) {
            gx.noalias() = gram.gram * x;
            obj = (instance.y - instance.h * x).squaredNorm();
        }
    }
}

MlResult ml_oracle(const SystemInstance& instance, std::uint64_t budget) {
    MlResult best;
    best.objective = std::numeric_limits<double>::infinity();
    auto lex_less = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            if (a(i) < b(i)) return true;
            if (a(i) > b(i)) return false;
        }
        return false;
    };
    enumerate_lattice(instance, budget, [&](const Eigen::VectorXd& x, double obj) {
        if (obj < best.objective || (obj == best.objective && lex_less(x, best.x))) {
            best.objective = obj;
            best.x = x;
        }
    });
    best.objective = ml_objective(instance, best.x);
    return best;
}

DetectionResult MlDetector::detect(const SystemInstance& instance, bool) const {
    DetectionResult r;
    r.x_hard = ml_oracle(instance, budget_).x;
    r.iterations_run = 1;
    return r;
}

}  // namespace mimo
