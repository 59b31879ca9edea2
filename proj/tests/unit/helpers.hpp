#pragma once

#include "mimo/core/system.hpp"
#include "mimo/gnn/params.hpp"

namespace testing {

inline mimo::SystemInstance tiny_instance(std::uint64_t seed, int n_tx = 1, int n_rx = 2, int qam = 4,
                                          double snr_db = 6.0) {
    mimo::RngStream rng(seed, 0);
    return mimo::sample_instance(n_tx, n_rx, mimo::make_constellation(qam), snr_db, rng);
}

}  // namespace testing
