#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mimo/detect/detector.hpp"
#include "mimo/detect/linear.hpp"
#include "mimo/train/evaluate.hpp"

namespace mimo {

inline constexpr std::uint64_t kDefaultPosteriorBudget = std::uint64_t{1} << 20;

/// Exact posterior p(x|y) over Omega^K.
struct TruePosterior {
    Eigen::VectorXd probs;    ///< in enumeration order (see enumerate_lattice)
    Eigen::MatrixXd support;  ///< K x M^K, only when requested
    Eigen::VectorXd mu_true;
    Eigen::VectorXd sigma_true_diag;
    double log_z = 0.0;       ///< log sum_x exp(-||y - Hx||^2 / (2 sigma^2))
    Eigen::VectorXd x_map;    ///< argmax (lexicographically smallest on ties)
    double map_objective = 0.0;
};

/// Enumerates all M^K candidates with an online log-sum-exp.
/// Throws std::length_error when M^K exceeds `budget`.
TruePosterior enumerate_posterior(const SystemInstance& instance, std::uint64_t budget = kDefaultPosteriorBudget,
                                  bool keep_support = false);

/// (||mu_true - mu||, ||Sigma_true - Sigma||) for one instance.
std::pair<double, double> moment_gap(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma_diag,
                                     const TruePosterior& posterior);

/// Per-instance gaps from the last trace entry's (post_mean, post_var), averaged.
std::pair<double, double> moment_gaps(std::span<const IterationTrace> last_iterations,
                                      std::span<const TruePosterior> posteriors);

/// p(x_t|y) / p(x_ml|y) per iteration from objective differences.
std::vector<double> probability_ratio(std::span<const Eigen::VectorXd> x_est_per_iter,
                                      const SystemInstance& instance, const Eigen::VectorXd& x_ml);
/// Same ratio from explicitly normalized posterior probabilities.
std::vector<double> probability_ratio_normalized(std::span<const Eigen::VectorXd> x_est_per_iter,
                                                 const SystemInstance& instance, const TruePosterior& posterior);

/// Pairs of (standard-Gaussian quantile, sorted standardized residual).
struct QqData {
    std::vector<double> theoretical;
    std::vector<double> empirical;
};

/// Streaming Pearson statistics of the normalized residual noise
/// eps_k = (x_obs,k - x_ml,k) / sqrt(v_obs,k), one K x K matrix per iteration.
class ResidualNoiseAccumulator {
public:
    ResidualNoiseAccumulator(int users, int iterations, bool keep_final_residuals = true);

    /// `trace` holds one entry per iteration with cavity_mean/cavity_var.
    void add(std::span<const IterationTrace> trace, const Eigen::VectorXd& x_ml);

    std::int64_t count() const { return n_; }
    /// Pearson matrix of iteration t.  Throws std::invalid_argument if fewer
    /// than two realizations were added.
    Eigen::MatrixXd pearson(int t) const;
    /// ||C_t - I||_F per iteration.
    std::vector<double> coefficients() const;
    /// QQ pairs of the pooled final-iteration residuals, `points` levels.
    QqData qq(int points = 200) const;

private:
    int users_;
    int iterations_;
    bool keep_;
    std::int64_t n_ = 0;
    std::vector<Eigen::VectorXd> mean_;
    std::vector<Eigen::MatrixXd> comoment_;
    std::vector<double> final_;
};

struct ResidualNoiseStats {
    std::vector<double> c_per_iter;
    QqData qq;
};

/// Batch form of ResidualNoiseAccumulator.
ResidualNoiseStats residual_noise_stats(std::span<const std::vector<IterationTrace>> traces,
                                        std::span<const Eigen::VectorXd> x_ml);

struct MetricsReport {
    std::string detector;
    LinkSetup link;
    double snr_db = 0.0;
    std::int64_t instances = 0;
    double delta_mu = 0.0;
    double delta_sigma = 0.0;
    std::vector<double> r_per_iter;
    std::vector<double> c_per_iter;
    double ser = 0.0;
    QqData qq;
};

/// Runs the detector with tracing on `instances` instances from the shared
/// evaluation stream and computes every posterior-quality metric against the
/// exact posterior.  Results do not depend on `workers`.
MetricsReport posterior_metrics(const Detector& detector, const LinkSetup& link, double snr_db,
                                std::int64_t instances, std::uint64_t seed, int workers = 1,
                                std::uint64_t budget = kDefaultPosteriorBudget);

/// sigma_max / sigma_min; infinity when H is numerically rank deficient.
double condition_number(const Eigen::MatrixXd& h);

struct ConditionBin {
    double lo = 0.0;
    double hi = 0.0;
    std::int64_t channels = 0;
    std::int64_t errors = 0;
    std::int64_t symbols = 0;
    double ser = 0.0;
    double ci95 = 0.0;
};

/// `count` logarithmically spaced bins over [lo, hi].  Channels outside the
/// range go to the first/last bin; rank-deficient channels to a final bin
/// with lo = hi = infinity.
std::vector<ConditionBin> condition_binned_ser(const Detector& detector, const LinkSetup& link, double snr_db,
                                               int channels, int draws_per_channel, double lo, double hi,
                                               int count, std::uint64_t seed, int workers = 1);

void write_metrics_csv(std::span<const MetricsReport> reports, const std::filesystem::path& path);
void write_qq_csv(const MetricsReport& report, const std::filesystem::path& path);
void write_condition_csv(std::span<const ConditionBin> bins, const std::filesystem::path& path);

}  // namespace mimo
