#include <doctest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "mimo/analysis/analysis.hpp"
#include "mimo/detect/ep.hpp"
#include "mimo/detect/linear.hpp"

using namespace mimo;

TEST_CASE("posterior is normalized and consistent with its support") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const SystemInstance inst = testing::tiny_instance(seed, 2, 3, 16, 4.0);
        const TruePosterior p = enumerate_posterior(inst, kDefaultPosteriorBudget, true);
        CHECK(std::abs(p.probs.sum() - 1.0) < 1e-9);
        REQUIRE(p.support.cols() == 256);
        const Eigen::VectorXd mu = p.support * p.probs;
        CHECK((mu - p.mu_true).norm() < 1e-12);
        Eigen::VectorXd second = p.support.array().square().matrix() * p.probs;
        CHECK((second - mu.array().square().matrix() - p.sigma_true_diag).norm() < 1e-12);
        // log Z from a direct sum
        double z = 0.0;
        for (Eigen::Index i = 0; i < p.support.cols(); ++i)
            z += std::exp(-ml_objective(inst, p.support.col(i)) / (2.0 * inst.noise_var));
        CHECK(p.log_z == doctest::Approx(std::log(z)).epsilon(1e-10));
    }
}

TEST_CASE("single binary user has a closed-form posterior") {
    const Constellation c = make_constellation(4);
    const double a = c.real_points[1];
    for (double y0 : {-0.7, 0.0, 0.3, 1.1}) {
        Eigen::MatrixXd h(2, 1);
        h << 0.8, -0.4;
        Eigen::VectorXd x(1);
        x << a;
        SystemInstance inst = make_instance(h, x, Eigen::VectorXd::Zero(2), 0.3, c);
        inst.y << y0, 0.2;
        const TruePosterior p = enumerate_posterior(inst);
        const double s = h.col(0).dot(inst.y) * a / inst.noise_var;
        CHECK(p.mu_true(0) == doctest::Approx(a * std::tanh(s)).epsilon(1e-12));
        CHECK(p.sigma_true_diag(0) == doctest::Approx(a * a * (1 - std::tanh(s) * std::tanh(s))).epsilon(1e-10));
    }
}

TEST_CASE("posterior argmax is the ml solution") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const SystemInstance inst = testing::tiny_instance(seed, 3, 3, 4, 2.0);
        const TruePosterior p = enumerate_posterior(inst);
        const MlResult ml = ml_oracle(inst);
        CHECK(p.x_map == ml.x);
        CHECK(p.map_objective == doctest::Approx(ml.objective).epsilon(1e-12));
    }
}

TEST_CASE("huge noise gives a uniform posterior") {
    SystemInstance inst = testing::tiny_instance(2, 2, 2, 16);
    inst.noise_var = 1e12;
    const TruePosterior p = enumerate_posterior(inst);
    CHECK((p.probs.array() - 1.0 / 256).abs().maxCoeff() < 1e-9);
    CHECK(p.mu_true.cwiseAbs().maxCoeff() < 1e-9);
    CHECK((p.sigma_true_diag.array() - 0.5).abs().maxCoeff() < 1e-9);
    CHECK_THROWS_AS(enumerate_posterior(inst, 100), std::length_error);
}

TEST_CASE("probability ratio two ways") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const SystemInstance inst = testing::tiny_instance(seed, 3, 4, 4, 8.0);
        const DetectionResult r = ep_detect(inst, {}, true);
        std::vector<Eigen::VectorXd> hard;
        for (const auto& x : r.x_soft_trace) hard.push_back(hard_decision(x, inst.constellation));
        const TruePosterior p = enumerate_posterior(inst);
        const auto a = probability_ratio(hard, inst, p.x_map);
        const auto b = probability_ratio_normalized(hard, inst, p);
        REQUIRE(a.size() == hard.size());
        for (std::size_t t = 0; t < a.size(); ++t) {
            CHECK(std::abs(a[t] - b[t]) < 1e-9);
            CHECK(a[t] <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("moment gap of the exact moments is zero") {
    const SystemInstance inst = testing::tiny_instance(3, 2, 2);
    const TruePosterior p = enumerate_posterior(inst);
    auto [dm, ds] = moment_gap(p.mu_true, p.sigma_true_diag, p);
    CHECK(dm == 0.0);
    CHECK(ds == 0.0);
    Eigen::VectorXd mu = p.mu_true;
    mu(0) += 0.3;
    mu(1) -= 0.4;
    CHECK(moment_gap(mu, p.sigma_true_diag, p).first == doctest::Approx(0.5));
}

namespace {

std::vector<IterationTrace> synthetic_trace(const Eigen::VectorXd& x, const Eigen::VectorXd& eps, int iterations) {
    std::vector<IterationTrace> tr(static_cast<std::size_t>(iterations));
    for (auto& t : tr) {
        t.cavity_var = Eigen::VectorXd::Constant(x.size(), 0.25);
        t.cavity_mean = x + 0.5 * eps;
    }
    return tr;
}

}  // namespace

TEST_CASE("residual pearson matrix") {
    const int k = 6;
    ResidualNoiseAccumulator iid(k, 2), dup(k, 1);
    RngStream rng(4, 4);
    CHECK_THROWS_AS(iid.pearson(0), std::invalid_argument);
    for (int n = 0; n < 20000; ++n) {
        Eigen::VectorXd x(k), e(k);
        for (int i = 0; i < k; ++i) {
            x(i) = rng.uniform() < 0.5 ? -0.7 : 0.7;
            e(i) = rng.normal();
        }
        iid.add(synthetic_trace(x, e, 2), x);
        Eigen::VectorXd d = e;
        d(3) = e(1);  // duplicated stream
        dup.add(synthetic_trace(x, d, 1), x);
    }
    const Eigen::MatrixXd c = iid.pearson(1);
    CHECK((c - c.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((c.diagonal().array() - 1.0).abs().maxCoeff() < 1e-12);
    const auto coef = iid.coefficients();
    REQUIRE(coef.size() == 2);
    CHECK(coef[1] < 0.05 * k);
    CHECK(dup.pearson(0)(1, 3) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dup.coefficients()[0] > std::sqrt(2.0) * 0.99);

    const QqData qq = iid.qq(99);
    REQUIRE(qq.theoretical.size() == 99);
    for (std::size_t i = 5; i < 94; ++i) CHECK(std::abs(qq.empirical[i] - qq.theoretical[i]) < 0.05);
    CHECK(qq.theoretical[49] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("residual statistics batch form matches the accumulator") {
    const int k = 4;
    RngStream rng(8, 1);
    std::vector<std::vector<IterationTrace>> traces;
    std::vector<Eigen::VectorXd> xs;
    ResidualNoiseAccumulator acc(k, 3);
    for (int n = 0; n < 300; ++n) {
        Eigen::VectorXd x = Eigen::VectorXd::Constant(k, 0.7), e(k);
        for (int i = 0; i < k; ++i) e(i) = rng.normal();
        traces.push_back(synthetic_trace(x, e, 3));
        xs.push_back(x);
        acc.add(traces.back(), x);
    }
    const ResidualNoiseStats s = residual_noise_stats(traces, xs);
    const auto c = acc.coefficients();
    REQUIRE(s.c_per_iter.size() == 3);
    for (int t = 0; t < 3; ++t) CHECK(s.c_per_iter[static_cast<std::size_t>(t)] == doctest::Approx(c[static_cast<std::size_t>(t)]));
}

TEST_CASE("condition number") {
    RngStream rng(2, 2);
    Eigen::MatrixXd a(6, 4);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() * Eigen::MatrixXd::Identity(6, 4);
    CHECK(condition_number(q) == doctest::Approx(1.0).epsilon(1e-12));
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3, 2);
    d(0, 0) = 2.0;
    d(1, 1) = 0.2;
    CHECK(condition_number(d) == doctest::Approx(10.0));
    Eigen::MatrixXd r = a;
    r.col(3) = r.col(0) * 2.0 - r.col(1);
    CHECK(std::isinf(condition_number(r)));
}

TEST_CASE("condition binning accounts for every channel") {
    const MmseDetector det;
    const LinkSetup link{2, 2, 4};
    const auto bins = condition_binned_ser(det, link, 10.0, 60, 5, 1.0, 100.0, 4, 3);
    REQUIRE(bins.size() == 5);
    CHECK(std::isinf(bins.back().lo));
    std::int64_t channels = 0, symbols = 0;
    for (std::size_t i = 0; i + 1 < bins.size(); ++i) {
        CHECK(bins[i].hi == doctest::Approx(bins[i].lo * std::sqrt(10.0)));
        channels += bins[i].channels;
        symbols += bins[i].symbols;
    }
    channels += bins.back().channels;
    symbols += bins.back().symbols;
    CHECK(channels == 60);
    CHECK(symbols == 60 * 5 * 2);
    const auto again = condition_binned_ser(det, link, 10.0, 60, 5, 1.0, 100.0, 4, 3, 2);
    for (std::size_t i = 0; i < bins.size(); ++i) CHECK(again[i].errors == bins[i].errors);
}

TEST_CASE("posterior metrics are reproducible across worker counts") {
    const EpDetector ep;
    const LinkSetup link{2, 2, 4};
    const MetricsReport a = posterior_metrics(ep, link, 8.0, 600, 5, 1);
    const MetricsReport b = posterior_metrics(ep, link, 8.0, 600, 5, 3);
    CHECK(a.instances == 600);
    CHECK(a.delta_mu == b.delta_mu);
    CHECK(a.delta_sigma == b.delta_sigma);
    CHECK(a.r_per_iter == b.r_per_iter);
    CHECK(a.c_per_iter == b.c_per_iter);
    REQUIRE(a.r_per_iter.size() == 10);
    for (double r : a.r_per_iter) CHECK((r > 0.0 && r <= 1.0 + 1e-12));
    CHECK(a.delta_mu > 0.0);
}
