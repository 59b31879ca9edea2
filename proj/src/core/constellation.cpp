#include "mimo/core/constellation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mimo {

int Constellation::nearest_index(double value) const {
    int best = 0;
    double best_dist = std::abs(value - real_points[0]);
    for (int i = 1; i < size(); ++i) {
        double d = std::abs(value - real_points[static_cast<std::size_t>(i)]);
        if (d < best_dist) {
            best_dist = d;
            best = i;
        }
    }
    return best;
}

int Constellation::index_of(double value) const {
    for (int i = 0; i < size(); ++i)
        if (real_points[static_cast<std::size_t>(i)] == value) return i;
    return -1;
}

Constellation make_constellation(int qam_order) {
    if (qam_order != 4 && qam_order != 16 && qam_order != 64)
        throw std::invalid_argument("unsupported QAM order " + std::to_string(qam_order) +
                                    " (expected 4, 16 or 64)");

    const int m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(qam_order))));
    int bits = 0;
    while ((1 << bits) < m) ++bits;

    // Average energy of the unscaled odd-integer grid is 2(M~ - 1)/3.
    const double scale = std::sqrt(3.0 / (2.0 * (qam_order - 1)));

    Constellation c;
    c.qam_order = qam_order;
    c.es_real = 0.5;
    c.real_points.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) c.real_points[static_cast<std::size_t>(i)] = (2.0 * i - (m - 1)) * scale;

    // Gray label g of level index i is i ^ (i >> 1).
    std::vector<int> level_of_gray(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) level_of_gray[static_cast<std::size_t>(i ^ (i >> 1))] = i;

    c.complex_points.resize(static_cast<std::size_t>(qam_order));
    for (int gi = 0; gi < m; ++gi) {
        for (int gq = 0; gq < m; ++gq) {
            double re = c.real_points[static_cast<std::size_t>(level_of_gray[static_cast<std::size_t>(gi)])];
            double im = c.real_points[static_cast<std::size_t>(level_of_gray[static_cast<std::size_t>(gq)])];
            c.complex_points[static_cast<std::size_t>((gi << bits) | gq)] = {re, im};
        }
    }
    return c;
}

}  // namespace mimo
