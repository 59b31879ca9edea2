#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "mimo/gnn/params.hpp"

namespace mimo {

/// Provenance stored alongside the weights.
struct TrainingMetadata {
    std::string detector_kind;
    std::uint32_t epochs = 0;
    double snr_min_db = 0.0;
    double snr_max_db = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::uint32_t> k_train;
    std::uint32_t n_rx = 0;
    std::uint32_t qam_order = 0;

    bool operator==(const TrainingMetadata&) const = default;
};

struct Checkpoint {
    GnnParams params;
    TrainingMetadata metadata;
};

class CheckpointError : public std::runtime_error {
public:
    enum class Kind { Io, BadMagic, VersionMismatch, DimensionMismatch, Truncated, Malformed };
    CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout (all integers and floats little-endian):
///   "MIMOGNN\0", u32 version, u32 x5 dims (N_u, N_h1, N_h2, L, M),
///   metadata, u32 tensor count, then per tensor: u32 name length, name,
///   u32 rows, u32 cols, rows*cols f64 in row-major order.
void save_params(const Checkpoint& checkpoint, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);

Checkpoint load_params(const std::filesystem::path& path);
/// As above, and rejects checkpoints whose dims differ from `expected`.
Checkpoint load_params(const std::filesystem::path& path, const GnnDims& expected);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

/// JSON sidecar with dims and training provenance, written next to the checkpoint.
void write_sidecar(const Checkpoint& checkpoint, const std::filesystem::path& path);

}  // namespace mimo
