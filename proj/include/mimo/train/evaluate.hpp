#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mimo/core/rng.hpp"
#include "mimo/detect/detector.hpp"
#include "mimo/gnn/params.hpp"
#include "mimo/neural/neural.hpp"

namespace mimo {

/// Antenna and modulation setup shared by all points of an evaluation.
struct LinkSetup {
    int n_tx = 8;
    int n_rx = 8;
    int qam_order = 4;
};

/// Random stream of sample `index` at a given SNR.  It depends only on
/// (seed, n_tx, SNR), so every detector sees the same instances.
RngStream evaluation_stream(std::uint64_t seed, const LinkSetup& link, double snr_db, std::uint64_t index);

/// Complex-symbol error counts of `samples` instances at one SNR.
std::vector<int> instance_errors(const Detector& detector, const LinkSetup& link, double snr_db, int samples,
                                 std::uint64_t seed, int workers = 1);

struct SerPoint {
    double snr_db = 0.0;
    std::int64_t errors = 0;
    std::int64_t symbols = 0;
    double ser = 0.0;
    double ci95 = 0.0;  ///< half-width of the normal-approximation interval
};

/// 1.96 sqrt(p (1 - p) / n).
double ser_ci95(std::int64_t errors, std::int64_t symbols);

std::vector<SerPoint> evaluate_ser(const Detector& detector, const LinkSetup& link, std::span<const double> snr_db,
                                   int samples, std::uint64_t seed, int workers = 1);
std::vector<SerPoint> evaluate_ser(std::shared_ptr<const GnnParams> params, DetectorKind kind,
                                   const LinkSetup& link, std::span<const double> snr_db, int samples,
                                   std::uint64_t seed, int workers = 1);

}  // namespace mimo
