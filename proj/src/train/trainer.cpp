#include "mimo/train/trainer.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include "mimo/core/rng.hpp"
#include "mimo/core/system.hpp"

namespace mimo {

namespace {

constexpr std::uint64_t kTrainStream = 0x747261696eULL;
constexpr std::uint64_t kBatchStream = 0x6261746368ULL;
constexpr std::uint64_t kValStream = 0x76616cULL;

SystemInstance training_sample(const TrainConfig& c, const Constellation& omega, int k_users, RngStream rng) {
    const double snr = rng.uniform(c.snr_min_db, c.snr_max_db);
    return sample_instance(k_users / 2, c.n_rx, omega, snr, rng);
}

UnrolledConfig unrolled(const TrainConfig& c) {
    return {c.detector_kind, c.iterations, c.eta, c.dims.rounds, c.truncate_observation};
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads.
void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    workers = std::max(1, std::min(workers, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = w; i < n; i += workers) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

OptimizerState::OptimizerState(const GnnDims& dims, double lr_)
    : m(GnnParams::zeros(dims)), v(GnnParams::zeros(dims)), lr(lr_) {}

void adam_step(OptimizerState& state, GnnParams& params, const GnnParams& grad, const AdamConfig& cfg) {
    ++state.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    std::vector<Eigen::MatrixXd*> p, m, v;
    std::vector<const Eigen::MatrixXd*> g;
    params.for_each([&](const std::string&, Eigen::MatrixXd& t) { p.push_back(&t); });
    state.m.for_each([&](const std::string&, Eigen::MatrixXd& t) { m.push_back(&t); });
    state.v.for_each([&](const std::string&, Eigen::MatrixXd& t) { v.push_back(&t); });
    grad.for_each([&](const std::string&, const Eigen::MatrixXd& t) { g.push_back(&t); });
    for (std::size_t i = 0; i < p.size(); ++i) {
        *m[i] = cfg.beta1 * *m[i] + (1.0 - cfg.beta1) * *g[i];
        *v[i] = cfg.beta2 * *v[i] + (1.0 - cfg.beta2) * g[i]->cwiseAbs2();
        p[i]->array() -= state.lr * (m[i]->array() / c1) / ((v[i]->array() / c2).sqrt() + cfg.epsilon);
    }
}

PlateauScheduler::PlateauScheduler(double factor, int patience, double threshold)
    : factor_(factor), patience_(patience), threshold_(threshold), best_(std::numeric_limits<double>::infinity()) {
    if (!(factor > 0.0 && factor <= 1.0)) throw std::invalid_argument("plateau factor must lie in (0, 1]");
    if (patience < 0) throw std::invalid_argument("plateau patience must be non-negative");
}

bool PlateauScheduler::step(double loss, double& lr) {
    if (loss < best_ * (1.0 - threshold_)) {
        best_ = loss;
        bad_epochs_ = 0;
        return false;
    }
    if (++bad_epochs_ <= patience_) return false;
    lr *= factor_;
    ++reductions_;
    bad_epochs_ = 0;
    return true;
}

TrainConfig TrainConfig::full(DetectorKind kind) {
    TrainConfig c;
    c.detector_kind = kind;
    return c;
}

TrainConfig TrainConfig::desk(DetectorKind kind) {
    TrainConfig c;
    c.detector_kind = kind;
    c.epochs = 30;
    c.batches_per_epoch = 157;
    c.batch_size = 64;
    c.lr = 1e-3;
    c.snr_min_db = 3.0;
    c.snr_max_db = 13.0;
    c.k_train_set = {4, 8};
    c.n_rx = 8;
    c.val_samples = 1000;
    return c;
}

void TrainConfig::validate() const {
    if (epochs < 0 || batches_per_epoch < 1 || batch_size < 1) throw std::invalid_argument("train: bad epoch layout");
    if (!(snr_min_db <= snr_max_db)) throw std::invalid_argument("train: snr_min must not exceed snr_max");
    if (k_train_set.empty()) throw std::invalid_argument("train: k_train_set is empty");
    for (int k : k_train_set)
        if (k < 2 || k % 2 != 0 || k > 2 * n_rx)
            throw std::invalid_argument("train: each K must be even, positive and at most 2 n_rx");
    if (val_samples < 1) throw std::invalid_argument("train: need at least one validation sample");
    if (lr < 0.0) throw std::invalid_argument("train: negative learning rate");
    if (iterations < 1) throw std::invalid_argument("train: need at least one detector iteration");
    if (dims.alphabet != make_constellation(qam_order).size())
        throw std::invalid_argument("train: GNN alphabet does not match the constellation");
}

double validation_loss(const GnnParams& params, const TrainConfig& c, int epoch) {
    const Constellation omega = make_constellation(c.qam_order);
    const UnrolledConfig u = unrolled(c);
    std::vector<double> losses(static_cast<std::size_t>(c.val_samples));
    const RngStream base(c.seed, kValStream);
    parallel_for(c.val_samples, c.workers, [&](int i) {
        RngStream rng = base.split(static_cast<std::uint64_t>(epoch) * 0x100000000ULL + static_cast<std::uint64_t>(i));
        const int k = c.k_train_set[rng.index(c.k_train_set.size())];
        losses[static_cast<std::size_t>(i)] = sample_loss(training_sample(c, omega, k, rng), params, u);
    });
    double total = 0.0;
    for (double l : losses) total += l;
    return total / static_cast<double>(c.val_samples);
}

TrainingMetadata training_metadata(const TrainConfig& c, int epochs_run) {
    TrainingMetadata m;
    m.detector_kind = to_string(c.detector_kind);
    m.epochs = static_cast<std::uint32_t>(epochs_run);
    m.snr_min_db = c.snr_min_db;
    m.snr_max_db = c.snr_max_db;
    m.seed = c.seed;
    for (int k : c.k_train_set) m.k_train.push_back(static_cast<std::uint32_t>(k));
    m.n_rx = static_cast<std::uint32_t>(c.n_rx);
    m.qam_order = static_cast<std::uint32_t>(c.qam_order);
    return m;
}

TrainResult train(const TrainConfig& config, const EpochCallback& on_epoch) {
    return train(config, GnnParams::random(config.dims, config.seed), on_epoch);
}

TrainResult train(const TrainConfig& c, GnnParams params, const EpochCallback& on_epoch) {
    c.validate();
    if (!(params.dims == c.dims)) throw std::invalid_argument("train: initial parameters have the wrong dims");
    const Constellation omega = make_constellation(c.qam_order);
    const UnrolledConfig u = unrolled(c);
    const auto w = static_cast<std::size_t>(c.batch_size);
    const double weight = 1.0 / static_cast<double>(c.batch_size);

    TrainResult result;
    result.params = params;
    result.best_val_loss = validation_loss(params, c, 0);
    OptimizerState opt(c.dims, c.lr);
    PlateauScheduler scheduler(c.plateau_factor, c.plateau_patience, c.plateau_threshold);
    scheduler.step(result.best_val_loss, opt.lr);

    std::vector<GnnParams> grads(w, GnnParams::zeros(c.dims));
    std::vector<double> losses(w);
    const RngStream sample_base(c.seed, kTrainStream);
    const RngStream batch_base(c.seed, kBatchStream);

    for (int epoch = 1; epoch <= c.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (int b = 0; b < c.batches_per_epoch; ++b) {
            const std::uint64_t batch_id =
                static_cast<std::uint64_t>(epoch - 1) * static_cast<std::uint64_t>(c.batches_per_epoch) +
                static_cast<std::uint64_t>(b);
            RngStream brng = batch_base.split(batch_id);
            const int k_users = c.k_train_set[brng.index(c.k_train_set.size())];

            parallel_for(c.batch_size, c.workers, [&](int i) {
                const auto si = static_cast<std::size_t>(i);
                GnnParams& g = grads[si];
                g *= 0.0;
                RngStream rng = sample_base.split(batch_id * w + si);
                losses[si] = sample_loss_and_gradient(training_sample(c, omega, k_users, rng), params, u, weight, g);
            });

            GnnParams total = grads[0];
            double batch_loss = losses[0];
            for (std::size_t i = 1; i < w; ++i) {
                total += grads[i];
                batch_loss += losses[i];
            }
            batch_loss /= static_cast<double>(w);
            if (!std::isfinite(batch_loss) || !total.all_finite()) {
                result.diverged = true;
                result.message = "non-finite loss or gradient at epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(b);
                return result;
            }
            adam_step(opt, params, total);
            epoch_loss += batch_loss;
        }

        EpochLog row{epoch, epoch_loss / c.batches_per_epoch, validation_loss(params, c, epoch), opt.lr};
        if (!std::isfinite(row.val_loss)) {
            result.diverged = true;
            result.message = "non-finite validation loss at epoch " + std::to_string(epoch);
            return result;
        }
        if (row.val_loss < result.best_val_loss) {
            result.best_val_loss = row.val_loss;
            result.best_epoch = epoch;
            result.params = params;
        }
        scheduler.step(row.val_loss, opt.lr);
        result.log.push_back(row);
        if (on_epoch) on_epoch(row);
    }
    return result;
}

void write_training_log(const std::vector<EpochLog>& log, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.precision(10);
    out << "epoch,train_loss,val_loss,lr\n";
    for (const auto& r : log) out << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.lr << '\n';
}

}  // namespace mimo
