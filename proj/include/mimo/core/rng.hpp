#pragma once

#include <cstdint>
#include <random>

namespace mimo {

/// Independent random stream identified by (seed, stream_id).
///
/// Streams are derived by feeding both 64-bit words through std::seed_seq, so
/// per-instance streams can be created in any order (or in parallel) and
/// still reproduce the same draws.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_(engine_); }
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n);

    std::mt19937_64& engine() { return engine_; }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    /// A child stream, reproducible from (seed, stream_id, child).
    RngStream split(std::uint64_t child) const;

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace mimo
