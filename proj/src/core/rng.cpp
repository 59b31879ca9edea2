#include "mimo/core/rng.hpp"

namespace mimo {

namespace {

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32),
                      0x9e3779b9u};
    return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(seeded_engine(seed, stream_id)) {}

std::size_t RngStream::index(std::size_t n) {
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(engine_);
}

RngStream RngStream::split(std::uint64_t child) const {
    // Mix the child id into the stream id so siblings never collide with
    // plain stream ids used elsewhere.
    std::uint64_t mixed = stream_id_ * 0x9e3779b97f4a7c15ull + (child ^ 0xd1b54a32d192ed03ull);
    return RngStream(seed_ ^ 0x5851f42d4c957f2dull, mixed);
}

}  // namespace mimo
