#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mimo/gnn/checkpoint.hpp"
#include "mimo/gnn/params.hpp"
#include "mimo/train/loss.hpp"

namespace mimo {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam moment accumulators; shapes mirror GnnParams.
struct OptimizerState {
    GnnParams m;
    GnnParams v;
    std::int64_t step = 0;
    double lr = 0.0;

    OptimizerState(const GnnDims& dims, double lr);
};

/// One bias-corrected Adam update of `params` with gradient `grad`.
void adam_step(OptimizerState& state, GnnParams& params, const GnnParams& grad, const AdamConfig& config = {});

/// Multiplies the learning rate by `factor` once the monitored loss has failed
/// to improve by more than `threshold` (relative) for more than `patience`
/// consecutive epochs.
class PlateauScheduler {
public:
    PlateauScheduler(double factor = 0.91, int patience = 10, double threshold = 1e-4);

    /// Feeds one epoch's validation loss; returns true if lr was reduced.
    bool step(double loss, double& lr);

    int reductions() const { return reductions_; }
    double best() const { return best_; }

private:
    double factor_;
    int patience_;
    double threshold_;
    double best_;
    int bad_epochs_ = 0;
    int reductions_ = 0;
};

struct TrainConfig {
    DetectorKind detector_kind = DetectorKind::Gepnet;
    int epochs = 600;
    int batches_per_epoch = 1563;
    int batch_size = 64;
    double lr = 1e-4;
    double plateau_factor = 0.91;
    int plateau_patience = 10;
    double plateau_threshold = 1e-4;
    double snr_min_db = 0.0;
    double snr_max_db = 15.0;
    std::vector<int> k_train_set{16, 32};  ///< real-valued user counts K = 2 Nt
    int n_rx = 16;                         ///< receive antennas (N = 2 n_rx)
    int qam_order = 4;
    int val_samples = 5000;
    std::uint64_t seed = 1;
    int iterations = 10;
    double eta = 0.7;
    GnnDims dims{};
    bool truncate_observation = false;
    int workers = 1;

    /// Full-scale recipe: 600 epochs of 1563 batches of 64 samples.
    static TrainConfig full(DetectorKind kind);
    /// Reduced recipe for a 16-antenna system: 30 epochs of ~10^4 samples.
    static TrainConfig desk(DetectorKind kind);

    /// Throws std::invalid_argument when the configuration is inconsistent.
    void validate() const;
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    GnnParams params;  ///< best-validation parameters
    std::vector<EpochLog> log;
    double best_val_loss = 0.0;
    int best_epoch = 0;
    bool diverged = false;
    std::string message;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Runs the full training recipe.  Every sample is drawn from its own
/// (seed, index) random stream and per-sample gradients are summed in sample
/// order, so results do not depend on the number of workers.  On a
/// non-finite loss or gradient the run stops and returns the best
/// parameters seen so far with `diverged` set.
TrainResult train(const TrainConfig& config, const EpochCallback& on_epoch = {});

/// As above, starting from the given parameters.
TrainResult train(const TrainConfig& config, GnnParams initial, const EpochCallback& on_epoch = {});

/// Mean per-sample loss on `count` samples from the validation stream of `epoch`.
double validation_loss(const GnnParams& params, const TrainConfig& config, int epoch);

TrainingMetadata training_metadata(const TrainConfig& config, int epochs_run);

/// CSV with header epoch,train_loss,val_loss,lr.
void write_training_log(const std::vector<EpochLog>& log, const std::filesystem::path& path);

}  // namespace mimo
