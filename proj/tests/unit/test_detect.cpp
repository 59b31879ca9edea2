#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "helpers.hpp"
#include "mimo/detect/bpic.hpp"
#include "mimo/detect/ep.hpp"
#include "mimo/detect/gram.hpp"
#include "mimo/detect/linear.hpp"

using namespace mimo;

namespace {

// Brute force over Omega^K by mixed-radix counting.
MlResult brute_ml(const SystemInstance& inst) {
    const int k = inst.users();
    const int m = inst.constellation.size();
    const auto total = lattice_size(m, k);
    MlResult best;
    best.objective = std::numeric_limits<double>::infinity();
    Eigen::VectorXd x(k);
    for (std::uint64_t i = 0; i < total; ++i) {
        std::uint64_t r = i;
        for (int j = k - 1; j >= 0; --j) {
            x(j) = inst.constellation.real_points[r % static_cast<std::uint64_t>(m)];
            r /= static_cast<std::uint64_t>(m);
        }
        const double obj = ml_objective(inst, x);
        if (obj < best.objective) {
            best.objective = obj;
            best.x = x;
        }
    }
    return best;
}

SystemInstance orthogonal_noiseless(std::uint64_t seed, int k, int qam) {
    const Constellation c = make_constellation(qam);
    RngStream rng(seed, 9);
    Eigen::MatrixXd a(2 * k, k);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() * Eigen::MatrixXd::Identity(2 * k, k);
    Eigen::VectorXd x(k);
    for (int i = 0; i < k; ++i) x(i) = c.real_points[rng.index(static_cast<std::size_t>(c.size()))];
    return make_instance(q, x, Eigen::VectorXd::Zero(2 * k), 1e-4, c);
}

}  // namespace

TEST_CASE("gaussian product and softmax helpers") {
    auto [m, v] = gaussian_product(1.0, 2.0, 3.0, 6.0);
    CHECK(v == doctest::Approx(1.5));
    CHECK(m == doctest::Approx((1.0 * 6.0 + 3.0 * 2.0) / 8.0));
    auto [m2, v2] = gaussian_product(0.3, std::numeric_limits<double>::infinity(), 2.0, 0.5);
    CHECK(m2 == doctest::Approx(2.0));
    CHECK(v2 == doctest::Approx(0.5));

    Eigen::MatrixXd logits(2, 3);
    logits << 1000.0, 1000.0, 1000.0, 0.0, std::log(2.0), std::log(3.0);
    const Eigen::MatrixXd q = softmax_rows(logits);
    CHECK(q(0, 0) == doctest::Approx(1.0 / 3.0));
    CHECK(q(1, 2) == doctest::Approx(0.5));
}

TEST_CASE("discretized cavity moments") {
    const Constellation c = make_constellation(16);
    Eigen::VectorXd mean(3), var(3);
    mean << 0.0, 10.0, 0.2;
    var << 1e6, 1e-3, 0.05;
    const CavityDistribution cav = discretize_gaussian(mean, var, c);
    for (int k = 0; k < 3; ++k) CHECK(cav.q.row(k).sum() == doctest::Approx(1.0));
    auto [x, v] = discrete_moments(cav, c);
    CHECK(std::abs(x(0)) < 1e-6);
    CHECK(v(0) == doctest::Approx(c.es_real).epsilon(1e-4));
    CHECK(x(1) == doctest::Approx(c.real_points.back()));
    CHECK(v(1) >= kVarianceFloor);
    // direct evaluation for the third row
    double z = 0.0, s1 = 0.0, s2 = 0.0;
    for (double p : c.real_points) {
        const double w = std::exp(-(p - 0.2) * (p - 0.2) / (2 * 0.05));
        z += w;
        s1 += w * p;
        s2 += w * p * p;
    }
    CHECK(x(2) == doctest::Approx(s1 / z).epsilon(1e-12));
    CHECK(v(2) == doctest::Approx(s2 / z - (s1 / z) * (s1 / z)).epsilon(1e-10));
}

TEST_CASE("ep observation matches a direct inverse") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const SystemInstance inst = testing::tiny_instance(seed, 3, 4, 16, 8.0);
        const int k = inst.users();
        RngStream rng(seed, 2);
        Eigen::VectorXd gamma(k), lambda(k);
        for (int i = 0; i < k; ++i) {
            gamma(i) = rng.normal();
            lambda(i) = 0.5 + rng.uniform() * 3.0;
        }
        const EpObservation obs = ep_observe(inst, gamma, lambda);
        const Eigen::MatrixXd a =
            inst.h.transpose() * inst.h / inst.noise_var + Eigen::MatrixXd(lambda.asDiagonal());
        const Eigen::MatrixXd cov = a.inverse();
        const Eigen::VectorXd b = inst.h.transpose() * inst.y / inst.noise_var + gamma;
        const Eigen::VectorXd mu = cov * b;
        // linear-system residual relative to the right-hand side
        CHECK((a * obs.mu_post - b).norm() / b.norm() < 1e-10);
        for (int i = 0; i < k; ++i) {
            CHECK(obs.sigma_post(i) == doctest::Approx(cov(i, i)).epsilon(1e-10));
            CHECK(obs.mu_post(i) == doctest::Approx(mu(i)).epsilon(1e-9));
            const double v = 1.0 / (1.0 / cov(i, i) - lambda(i));
            CHECK(obs.v_obs(i) == doctest::Approx(v).epsilon(1e-8));
            CHECK(obs.x_obs(i) == doctest::Approx(v * (mu(i) / cov(i, i) - gamma(i))).epsilon(1e-8));
        }
    }
    const SystemInstance inst = testing::tiny_instance(1);
    CHECK_THROWS_AS(ep_observe(inst, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)), std::invalid_argument);
}

TEST_CASE("ep estimate damps and reverts non-positive precisions") {
    Eigen::VectorXd xh(2), vh(2), xo(2), vo(2), g(2), l(2);
    xh << 0.5, 0.1;
    vh << 0.1, 2.0;
    xo << 0.3, -0.2;
    vo << 0.4, 1.0;
    g << 0.2, -0.3;
    l << 1.5, 2.5;
    const EpUpdate up = ep_estimate(xh, vh, xo, vo, g, l, 0.25);
    const double lam0 = 1 / 0.1 - 1 / 0.4;
    const double gam0 = 0.5 / 0.1 - 0.3 / 0.4;
    CHECK(up.accepted(0) == 1.0);
    CHECK(up.lambda(0) == doctest::Approx(0.75 * lam0 + 0.25 * 1.5));
    CHECK(up.gamma(0) == doctest::Approx(0.75 * gam0 + 0.25 * 0.2));
    CHECK(up.accepted(1) == 0.0);
    CHECK(up.lambda(1) == doctest::Approx(2.5));
    CHECK(up.gamma(1) == doctest::Approx(-0.3));
}

TEST_CASE("bpic observation and combining weight") {
    const SystemInstance inst = testing::tiny_instance(4, 2, 3, 4, 5.0);
    const ChannelGram g = channel_gram(inst);
    const int k = inst.users();
    Eigen::VectorXd xp(k), vp(k);
    for (int i = 0; i < k; ++i) {
        xp(i) = 0.1 * i - 0.2;
        vp(i) = 0.05 * (i + 1);
    }
    const BpicObservation obs = bpic_observe(g, xp, vp);
    for (int i = 0; i < k; ++i) {
        const Eigen::VectorXd hi = inst.h.col(i);
        Eigen::VectorXd resid = inst.y;
        double var = inst.noise_var * hi.squaredNorm();
        for (int j = 0; j < k; ++j) {
            if (j == i) continue;
            resid -= inst.h.col(j) * xp(j);
            const double c = hi.dot(inst.h.col(j));
            var += c * c * vp(j);
        }
        const double n2 = hi.squaredNorm();
        CHECK(obs.mu(i) == doctest::Approx(hi.dot(resid) / n2).epsilon(1e-12));
        CHECK(obs.sigma(i) == doctest::Approx(var / (n2 * n2)).epsilon(1e-12));
    }
    CHECK(dsc_weight(0.0, 0.0) == 0.5);
    CHECK(dsc_weight(1.0, 3.0) == doctest::Approx(0.25));
    CHECK(dsc_weight(2.0, 0.0) == doctest::Approx(1.0));

    SystemInstance zero = inst;
    zero.h.col(1).setZero();
    CHECK_THROWS_AS(bpic_observe(zero, xp, vp), std::invalid_argument);
}

TEST_CASE("mmse matches the closed form") {
    const SystemInstance inst = testing::tiny_instance(8, 3, 4, 16, 10.0);
    const int k = inst.users();
    const Eigen::MatrixXd a = inst.h.transpose() * inst.h + inst.noise_var / 0.5 * Eigen::MatrixXd::Identity(k, k);
    const Eigen::VectorXd x = a.inverse() * inst.h.transpose() * inst.y;
    const DetectionResult r = mmse_detect(inst);
    CHECK((r.x_soft_trace.front() - x).norm() < 1e-10);
    for (int i = 0; i < k; ++i) CHECK(r.x_hard(i) == inst.constellation.nearest(x(i)));
}

TEST_CASE("ml oracle agrees with brute force") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const int qam = seed % 2 ? 4 : 16;
        const SystemInstance inst = testing::tiny_instance(seed, qam == 4 ? 3 : 2, 3, qam, 3.0);
        const MlResult a = ml_oracle(inst);
        const MlResult b = brute_ml(inst);
        CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-12));
        CHECK(a.x == b.x);
    }
    const SystemInstance big = testing::tiny_instance(2, 4, 4, 16);
    CHECK_THROWS_AS(ml_oracle(big, 1000), std::length_error);
    CHECK(lattice_size(2, 70) == std::numeric_limits<std::uint64_t>::max());
}

TEST_CASE("lattice enumeration is a gray walk over every candidate") {
    const SystemInstance inst = testing::tiny_instance(3, 2, 2, 16);
    std::set<std::vector<double>> seen;
    Eigen::VectorXd prev;
    bool gray = true;
    double worst = 0.0;
    enumerate_lattice(inst, kDefaultMlBudget, [&](const Eigen::VectorXd& x, double obj) {
        seen.insert(std::vector<double>(x.data(), x.data() + x.size()));
        if (prev.size()) gray = gray && ((x - prev).array() != 0.0).count() == 1;
        prev = x;
        worst = std::max(worst, std::abs(obj - ml_objective(inst, x)));
    });
    CHECK(seen.size() == 256);
    CHECK(gray);
    CHECK(worst < 1e-10);
}

TEST_CASE("ml ties resolve to the lexicographically smallest candidate") {
    const Constellation c = make_constellation(4);
    Eigen::MatrixXd h(4, 2);
    h << 1, 0, 0, 0, 0, 0, 0, 0;  // user 1 is invisible
    Eigen::VectorXd x(2);
    x << c.real_points[1], c.real_points[1];
    const SystemInstance inst = make_instance(h, x, Eigen::VectorXd::Zero(4), 0.1, c);
    const MlResult r = ml_oracle(inst);
    CHECK(r.x(0) == c.real_points[1]);
    CHECK(r.x(1) == c.real_points[0]);
}

TEST_CASE("iterative detectors recover noiseless orthogonal channels") {
    for (int qam : {4, 16, 64}) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const SystemInstance inst = orthogonal_noiseless(seed, 6, qam);
            CHECK(ep_detect(inst).x_hard == inst.x_true);
            CHECK(bpic_detect(inst).x_hard == inst.x_true);
            CHECK(mmse_detect(inst).x_hard == inst.x_true);
        }
    }
}

TEST_CASE("classical detectors are permutation equivariant") {
    const std::vector<int> perm{3, 1, 5, 0, 2, 4, 7, 6};
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const SystemInstance inst = testing::tiny_instance(seed, 4, 4, 16, 12.0);
        const SystemInstance p = permute_users(inst, perm);
        const auto check = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
            for (int k = 0; k < 8; ++k) CHECK(b(k) == a(perm[static_cast<std::size_t>(k)]));
        };
        check(ep_detect(inst).x_hard, ep_detect(p).x_hard);
        check(bpic_detect(inst).x_hard, bpic_detect(p).x_hard);
        check(mmse_detect(inst).x_hard, mmse_detect(p).x_hard);
    }
}

TEST_CASE("traces carry one entry per iteration") {
    const SystemInstance inst = testing::tiny_instance(6, 2, 4);
    const DetectionResult e = ep_detect(inst, {7, 0.9}, true);
    CHECK(e.trace.size() == 7);
    CHECK(e.x_soft_trace.size() == 7);
    CHECK(e.iterations_run == 7);
    const DetectionResult b = bpic_detect(inst, {4}, true);
    CHECK(b.trace.size() == 4);
    CHECK_THROWS_AS(ep_detect(inst, {0, 0.9}), std::invalid_argument);
    for (const auto& t : e.trace) CHECK((t.post_var.array() > 0.0).all());
}
