#include <doctest.h>

#include <bitset>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "mimo/core/system.hpp"

using namespace mimo;

TEST_CASE("constellation alphabets are normalized and symmetric") {
    for (int order : {4, 16, 64}) {
        const Constellation c = make_constellation(order);
        const int m = static_cast<int>(std::lround(std::sqrt(order)));
        REQUIRE(c.size() == m);
        REQUIRE(static_cast<int>(c.complex_points.size()) == order);
        double es = 0.0;
        for (double p : c.real_points) es += p * p;
        CHECK(es / m == doctest::Approx(0.5).epsilon(1e-12));
        double ec = 0.0;
        for (auto z : c.complex_points) ec += std::norm(z);
        CHECK(ec / order == doctest::Approx(1.0).epsilon(1e-12));
        for (int a = 0; a < m; ++a) {
            CHECK(c.real_points[static_cast<std::size_t>(a)] ==
                  doctest::Approx(-c.real_points[static_cast<std::size_t>(m - 1 - a)]));
            if (a > 0) CHECK(c.real_points[static_cast<std::size_t>(a)] > c.real_points[static_cast<std::size_t>(a - 1)]);
        }
    }
    CHECK_THROWS_AS(make_constellation(8), std::invalid_argument);
    CHECK_THROWS_AS(make_constellation(0), std::invalid_argument);
}

TEST_CASE("gray labelling: nearest neighbours differ in one bit") {
    for (int order : {4, 16, 64}) {
        const Constellation c = make_constellation(order);
        const double step = c.real_points[1] - c.real_points[0];
        int pairs = 0;
        for (int a = 0; a < order; ++a)
            for (int b = a + 1; b < order; ++b) {
                const double d = std::abs(c.complex_points[static_cast<std::size_t>(a)] -
                                          c.complex_points[static_cast<std::size_t>(b)]);
                if (std::abs(d - step) < 1e-9) {
                    ++pairs;
                    CHECK(std::bitset<8>(static_cast<unsigned>(a ^ b)).count() == 1);
                }
            }
        const int m = c.size();
        CHECK(pairs == 2 * m * (m - 1));
    }
}

TEST_CASE("nearest and index_of") {
    const Constellation c = make_constellation(16);
    for (int a = 0; a < c.size(); ++a) {
        const double p = c.real_points[static_cast<std::size_t>(a)];
        CHECK(c.index_of(p) == a);
        CHECK(c.nearest_index(p + 1e-3) == a);
    }
    CHECK(c.index_of(0.123) == -1);
    CHECK(c.nearest(100.0) == c.real_points.back());
    CHECK(c.nearest(-100.0) == c.real_points.front());
    // exact midpoint goes to the lower point
    CHECK(c.nearest_index(0.0) == 1);
}

TEST_CASE("real lifting is a homomorphism") {
    RngStream rng(3, 1);
    auto rand_c = [&](int r, int c) {
        Eigen::MatrixXcd m(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) m(i, j) = {rng.normal(), rng.normal()};
        return m;
    };
    const Eigen::MatrixXcd a = rand_c(4, 3);
    const Eigen::MatrixXcd b = rand_c(3, 5);
    const Eigen::MatrixXd lhs = lift_complex_to_real(a * b);
    const Eigen::MatrixXd rhs = lift_complex_to_real(a) * lift_complex_to_real(b);
    CHECK((lhs - rhs).norm() < 1e-12);

    const Eigen::VectorXcd v = rand_c(3, 1).col(0);
    CHECK((lift_complex_to_real(a) * lift_vector(v) - lift_vector(a * v)).norm() < 1e-12);
    CHECK((lift_complex_to_real(a.adjoint()) - lift_complex_to_real(a).transpose()).norm() < 1e-12);
}

TEST_CASE("sampled instances match the requested SNR") {
    const Constellation c = make_constellation(4);
    for (double snr : {0.0, 10.0}) {
        const int nt = 4, nr = 8;
        double sig = 0.0, noise = 0.0;
        RngStream rng(11, static_cast<std::uint64_t>(snr));
        const int draws = 20000;
        for (int i = 0; i < draws; ++i) {
            const SystemInstance inst = sample_instance(nt, nr, c, snr, rng);
            sig += (inst.h * inst.x_true).squaredNorm();
            noise += inst.n.squaredNorm();
            CHECK(inst.noise_var == doctest::Approx(0.5 * snr_to_noise_var(snr, nt, nr)));
        }
        const double measured = 10.0 * std::log10(sig / noise);
        CHECK(std::abs(measured - snr) < 0.05);
    }
    CHECK_THROWS_AS(snr_to_noise_var(10.0, 4, 2), std::invalid_argument);
}

TEST_CASE("instances are reproducible per stream") {
    const Constellation c = make_constellation(16);
    RngStream a(7, 42), b(7, 42), d(7, 43);
    const SystemInstance x = sample_instance(2, 3, c, 5.0, a);
    const SystemInstance y = sample_instance(2, 3, c, 5.0, b);
    const SystemInstance z = sample_instance(2, 3, c, 5.0, d);
    CHECK(x.h == y.h);
    CHECK(x.y == y.y);
    CHECK(x.h != z.h);
    CHECK(x.users() == 4);
    CHECK(x.dims() == 6);
    for (int k = 0; k < 4; ++k) CHECK(c.index_of(x.x_true(k)) >= 0);
    CHECK((x.y - x.h * x.x_true - x.n).norm() < 1e-14);
}

TEST_CASE("permute_users relabels columns and symbols") {
    const SystemInstance inst = testing::tiny_instance(5, 2, 3);
    const std::vector<int> perm{2, 0, 3, 1};
    const SystemInstance p = permute_users(inst, perm);
    for (int k = 0; k < 4; ++k) {
        CHECK(p.h.col(k) == inst.h.col(perm[static_cast<std::size_t>(k)]));
        CHECK(p.x_true(k) == inst.x_true(perm[static_cast<std::size_t>(k)]));
    }
    CHECK((p.y - p.h * p.x_true - p.n).norm() < 1e-12);
    CHECK(ml_objective(p, p.x_true) == doctest::Approx(ml_objective(inst, inst.x_true)));
    const std::vector<int> bad{0, 1};
    CHECK_THROWS_AS(permute_users(inst, bad), std::invalid_argument);
}

TEST_CASE("symbol errors pair real dimensions") {
    const SystemInstance inst = testing::tiny_instance(9, 2, 2);
    Eigen::VectorXd x = inst.x_true;
    CHECK(count_symbol_errors(inst, x) == 0);
    x(0) = -x(0);
    x(2) = -x(2);  // same complex symbol as dimension 0
    CHECK(count_symbol_errors(inst, x) == 1);
    x(1) = -x(1);
    CHECK(count_symbol_errors(inst, x) == 2);
    CHECK(symbols_per_instance(inst) == 2);
}
