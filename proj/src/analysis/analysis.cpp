#include "mimo/analysis/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include <boost/math/distributions/normal.hpp>

namespace mimo {

namespace {

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a(i) < b(i)) return true;
        if (a(i) > b(i)) return false;
    }
    return false;
}

void run_parallel(int n, int workers, const std::function<void(int)>& fn) {
    workers = std::max(1, std::min(workers, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (int i = w; i < n; i += workers) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.precision(10);
    return out;
}

}  // namespace

TruePosterior enumerate_posterior(const SystemInstance& instance, std::uint64_t budget, bool keep_support) {
    const Eigen::Index k_users = instance.users();
    const std::uint64_t size = lattice_size(instance.constellation.size(), instance.users());
    const double inv_two_var = 1.0 / (2.0 * instance.noise_var);

    std::vector<double> log_w;
    double top = -std::numeric_limits<double>::infinity();
    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(k_users);
    Eigen::VectorXd s2 = Eigen::VectorXd::Zero(k_users);
    TruePosterior post;
    post.map_objective = std::numeric_limits<double>::infinity();

    enumerate_lattice(instance, budget, [&](const Eigen::VectorXd& x, double obj) {
        if (log_w.empty()) {
            log_w.reserve(static_cast<std::size_t>(size));
            if (keep_support) post.support.resize(k_users, static_cast<Eigen::Index>(size));
        }
        if (keep_support) post.support.col(static_cast<Eigen::Index>(log_w.size())) = x;
        const double l = -obj * inv_two_var;
        log_w.push_back(l);
        if (l > top) {
            const double scale = std::exp(top - l);
            s0 *= scale;
            s1 *= scale;
            s2 *= scale;
            top = l;
        }
        const double w = std::exp(l - top);
        s0 += w;
        s1 += w * x;
        s2 += w * x.cwiseAbs2();
        if (obj < post.map_objective || (obj == post.map_objective && lex_less(x, post.x_map))) {
            post.map_objective = obj;
            post.x_map = x;
        }
    });

    post.log_z = top + std::log(s0);
    post.mu_true = s1 / s0;
    post.sigma_true_diag = (s2 / s0 - post.mu_true.cwiseAbs2()).cwiseMax(0.0);
    post.probs.resize(static_cast<Eigen::Index>(log_w.size()));
    for (std::size_t i = 0; i < log_w.size(); ++i)
        post.probs(static_cast<Eigen::Index>(i)) = std::exp(log_w[i] - post.log_z);
    post.map_objective = ml_objective(instance, post.x_map);
    return post;
}

std::pair<double, double> moment_gap(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma_diag,
                                     const TruePosterior& posterior) {
    return {(posterior.mu_true - mu).norm(), (posterior.sigma_true_diag - sigma_diag).norm()};
}

std::pair<double, double> moment_gaps(std::span<const IterationTrace> last_iterations,
                                      std::span<const TruePosterior> posteriors) {
    if (last_iterations.size() != posteriors.size() || posteriors.empty())
        throw std::invalid_argument("moment_gaps: need one trace per posterior");
    double dm = 0.0;
    double ds = 0.0;
    for (std::size_t i = 0; i < posteriors.size(); ++i) {
        auto [a, b] = moment_gap(last_iterations[i].post_mean, last_iterations[i].post_var, posteriors[i]);
        dm += a;
        ds += b;
    }
    const auto n = static_cast<double>(posteriors.size());
    return {dm / n, ds / n};
}

std::vector<double> probability_ratio(std::span<const Eigen::VectorXd> x_est_per_iter,
                                      const SystemInstance& instance, const Eigen::VectorXd& x_ml) {
    const double ml = ml_objective(instance, x_ml);
    std::vector<double> r;
    r.reserve(x_est_per_iter.size());
    for (const auto& x : x_est_per_iter)
        r.push_back(std::exp(-(ml_objective(instance, x) - ml) / (2.0 * instance.noise_var)));
    return r;
}

std::vector<double> probability_ratio_normalized(std::span<const Eigen::VectorXd> x_est_per_iter,
                                                 const SystemInstance& instance, const TruePosterior& posterior) {
    auto prob = [&](const Eigen::VectorXd& x) {
        return std::exp(-ml_objective(instance, x) / (2.0 * instance.noise_var) - posterior.log_z);
    };
    const double p_ml = prob(posterior.x_map);
    std::vector<double> r;
    r.reserve(x_est_per_iter.size());
    for (const auto& x : x_est_per_iter) r.push_back(prob(x) / p_ml);
    return r;
}

ResidualNoiseAccumulator::ResidualNoiseAccumulator(int users, int iterations, bool keep_final_residuals)
    : users_(users), iterations_(iterations), keep_(keep_final_residuals) {
    if (users < 1 || iterations < 1) throw std::invalid_argument("residual noise: need users and iterations");
    mean_.assign(static_cast<std::size_t>(iterations), Eigen::VectorXd::Zero(users));
    comoment_.assign(static_cast<std::size_t>(iterations), Eigen::MatrixXd::Zero(users, users));
}

void ResidualNoiseAccumulator::add(std::span<const IterationTrace> trace, const Eigen::VectorXd& x_ml) {
    if (static_cast<int>(trace.size()) != iterations_ || x_ml.size() != users_)
        throw std::invalid_argument("residual noise: trace shape does not match the accumulator");
    ++n_;
    for (int t = 0; t < iterations_; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        const Eigen::VectorXd eps = ((trace[ti].cavity_mean - x_ml).array() / trace[ti].cavity_var.array().sqrt()).matrix();
        const Eigen::VectorXd before = eps - mean_[ti];
        mean_[ti] += before / static_cast<double>(n_);
        comoment_[ti].noalias() += before * (eps - mean_[ti]).transpose();
        if (keep_ && t == iterations_ - 1) final_.insert(final_.end(), eps.data(), eps.data() + eps.size());
    }
}

Eigen::MatrixXd ResidualNoiseAccumulator::pearson(int t) const {
    if (n_ < 2) throw std::invalid_argument("residual noise: need at least two realizations");
    const Eigen::MatrixXd& c = comoment_[static_cast<std::size_t>(t)];
    const Eigen::VectorXd inv = c.diagonal().cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd r = inv.asDiagonal() * c * inv.asDiagonal();
    r = 0.5 * (r + r.transpose());
    r.diagonal().setOnes();
    return r;
}

std::vector<double> ResidualNoiseAccumulator::coefficients() const {
    std::vector<double> c;
    for (int t = 0; t < iterations_; ++t)
        c.push_back((pearson(t) - Eigen::MatrixXd::Identity(users_, users_)).norm());
    return c;
}

QqData ResidualNoiseAccumulator::qq(int points) const {
    QqData out;
    if (final_.size() < 2 || points < 1) return out;
    std::vector<double> v = final_;
    std::sort(v.begin(), v.end());
    double mean = 0.0;
    for (double e : v) mean += e;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double e : v) var += (e - mean) * (e - mean);
    const double sd = std::sqrt(var / static_cast<double>(v.size() - 1));
    const boost::math::normal gauss;
    for (int i = 0; i < points; ++i) {
        const double p = (i + 0.5) / points;
        const auto idx = std::min(v.size() - 1, static_cast<std::size_t>(p * static_cast<double>(v.size())));
        out.theoretical.push_back(boost::math::quantile(gauss, p));
        out.empirical.push_back((v[idx] - mean) / sd);
    }
    return out;
}

ResidualNoiseStats residual_noise_stats(std::span<const std::vector<IterationTrace>> traces,
                                        std::span<const Eigen::VectorXd> x_ml) {
    if (traces.size() != x_ml.size()) throw std::invalid_argument("residual noise: one x_ml per trace");
    if (traces.size() < 2) throw std::invalid_argument("residual noise: need at least two realizations");
    ResidualNoiseAccumulator acc(static_cast<int>(x_ml[0].size()), static_cast<int>(traces[0].size()));
    for (std::size_t i = 0; i < traces.size(); ++i) acc.add(traces[i], x_ml[i]);
    return {acc.coefficients(), acc.qq()};
}

MetricsReport posterior_metrics(const Detector& detector, const LinkSetup& link, double snr_db,
                                std::int64_t instances, std::uint64_t seed, int workers, std::uint64_t budget) {
    if (instances < 2) throw std::invalid_argument("posterior_metrics: need at least two instances");
    const Constellation omega = make_constellation(link.qam_order);

    struct PerInstance {
        double dm = 0.0, ds = 0.0;
        std::vector<double> r;
        std::vector<IterationTrace> trace;
        Eigen::VectorXd x_ml;
        int errors = 0;
    };

    MetricsReport rep;
    rep.detector = detector.name();
    rep.link = link;
    rep.snr_db = snr_db;
    rep.instances = instances;
    std::unique_ptr<ResidualNoiseAccumulator> acc;
    std::int64_t errors = 0;

    constexpr std::int64_t kBlock = 512;
    std::vector<PerInstance> block(static_cast<std::size_t>(kBlock));
    for (std::int64_t start = 0; start < instances; start += kBlock) {
        const int n = static_cast<int>(std::min(kBlock, instances - start));
        run_parallel(n, workers, [&](int j) {
            RngStream rng = evaluation_stream(seed, link, snr_db, static_cast<std::uint64_t>(start + j));
            const SystemInstance inst = sample_instance(link.n_tx, link.n_rx, omega, snr_db, rng);
            const TruePosterior post = enumerate_posterior(inst, budget);
            DetectionResult res = detector.detect(inst, true);
            if (res.trace.empty()) throw std::invalid_argument("posterior_metrics: detector produced no trace");
            PerInstance& out = block[static_cast<std::size_t>(j)];
            std::tie(out.dm, out.ds) = moment_gap(res.trace.back().post_mean, res.trace.back().post_var, post);
            std::vector<Eigen::VectorXd> hard;
            for (const auto& it : res.trace) hard.push_back(hard_decision(it.x_hat, omega));
            out.r = probability_ratio(hard, inst, post.x_map);
            out.errors = count_symbol_errors(inst, res.x_hard);
            out.x_ml = post.x_map;
            out.trace = std::move(res.trace);
        });
        for (int j = 0; j < n; ++j) {
            const PerInstance& p = block[static_cast<std::size_t>(j)];
            if (!acc) {
                acc = std::make_unique<ResidualNoiseAccumulator>(static_cast<int>(p.x_ml.size()),
                                                                 static_cast<int>(p.trace.size()));
                rep.r_per_iter.assign(p.r.size(), 0.0);
            }
            rep.delta_mu += p.dm;
            rep.delta_sigma += p.ds;
            for (std::size_t t = 0; t < p.r.size(); ++t) rep.r_per_iter[t] += p.r[t];
            acc->add(p.trace, p.x_ml);
            errors += p.errors;
        }
    }
    const auto count = static_cast<double>(instances);
    rep.delta_mu /= count;
    rep.delta_sigma /= count;
    for (double& r : rep.r_per_iter) r /= count;
    rep.c_per_iter = acc->coefficients();
    rep.qq = acc->qq();
    rep.ser = static_cast<double>(errors) / (count * link.n_tx);
    return rep;
}

double condition_number(const Eigen::MatrixXd& h) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(h);
    const Eigen::VectorXd s = svd.singularValues();
    const double smax = s(0);
    const double smin = s(s.size() - 1);
    const double tol = std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(h.rows(), h.cols())) * smax;
    if (smax == 0.0 || smin <= tol) return std::numeric_limits<double>::infinity();
    return smax / smin;
}

std::vector<ConditionBin> condition_binned_ser(const Detector& detector, const LinkSetup& link, double snr_db,
                                               int channels, int draws_per_channel, double lo, double hi,
                                               int count, std::uint64_t seed, int workers) {
    if (channels < 1 || draws_per_channel < 1 || count < 1 || !(lo > 0.0 && hi > lo))
        throw std::invalid_argument("condition_binned_ser: bad binning or sample counts");
    const Constellation omega = make_constellation(link.qam_order);
    const auto m = static_cast<std::size_t>(omega.size());

    std::vector<double> kappa(static_cast<std::size_t>(channels));
    std::vector<std::int64_t> errs(static_cast<std::size_t>(channels));
    run_parallel(channels, workers, [&](int c) {
        RngStream rng = evaluation_stream(seed, link, snr_db, static_cast<std::uint64_t>(c));
        const SystemInstance base = sample_instance(link.n_tx, link.n_rx, omega, snr_db, rng);
        kappa[static_cast<std::size_t>(c)] = condition_number(base.h);
        const double n_std = std::sqrt(base.noise_var);
        std::int64_t e = 0;
        for (int d = 0; d < draws_per_channel; ++d) {
            Eigen::VectorXd x(base.users());
            for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = omega.real_points[rng.index(m)];
            Eigen::VectorXd n(base.dims());
            for (Eigen::Index i = 0; i < n.size(); ++i) n(i) = rng.normal() * n_std;
            SystemInstance inst = make_instance(base.h, std::move(x), std::move(n), base.noise_var, omega);
            inst.n_tx = link.n_tx;
            inst.n_rx = link.n_rx;
            e += count_symbol_errors(inst, detector.detect(inst).x_hard);
        }
        errs[static_cast<std::size_t>(c)] = e;
    });

    std::vector<ConditionBin> bins(static_cast<std::size_t>(count) + 1);
    const double step = std::log(hi / lo) / count;
    for (int b = 0; b < count; ++b) {
        bins[static_cast<std::size_t>(b)].lo = lo * std::exp(step * b);
        bins[static_cast<std::size_t>(b)].hi = lo * std::exp(step * (b + 1));
    }
    bins.back().lo = bins.back().hi = std::numeric_limits<double>::infinity();
    for (int c = 0; c < channels; ++c) {
        const double k = kappa[static_cast<std::size_t>(c)];
        std::size_t b = bins.size() - 1;
        if (std::isfinite(k))
            b = static_cast<std::size_t>(std::clamp(static_cast<int>(std::floor(std::log(k / lo) / step)), 0, count - 1));
        bins[b].channels += 1;
        bins[b].errors += errs[static_cast<std::size_t>(c)];
        bins[b].symbols += static_cast<std::int64_t>(draws_per_channel) * link.n_tx;
    }
    for (auto& b : bins) {
        b.ser = b.symbols ? static_cast<double>(b.errors) / static_cast<double>(b.symbols) : 0.0;
        b.ci95 = ser_ci95(b.errors, b.symbols);
    }
    return bins;
}

void write_metrics_csv(std::span<const MetricsReport> reports, const std::filesystem::path& path) {
    std::ofstream out = open_csv(path);
    out << "detector,n_tx,n_rx,qam_order,snr_db,instances,ser,delta_mu,delta_sigma,r_final,c_final\n";
    for (const auto& r : reports)
        out << r.detector << ',' << r.link.n_tx << ',' << r.link.n_rx << ',' << r.link.qam_order << ',' << r.snr_db
            << ',' << r.instances << ',' << r.ser << ',' << r.delta_mu << ',' << r.delta_sigma << ','
            << (r.r_per_iter.empty() ? 0.0 : r.r_per_iter.back()) << ','
            << (r.c_per_iter.empty() ? 0.0 : r.c_per_iter.back()) << '\n';
}

void write_qq_csv(const MetricsReport& report, const std::filesystem::path& path) {
    std::ofstream out = open_csv(path);
    out << "gaussian_quantile,residual_quantile\n";
    for (std::size_t i = 0; i < report.qq.theoretical.size(); ++i)
        out << report.qq.theoretical[i] << ',' << report.qq.empirical[i] << '\n';
}

void write_condition_csv(std::span<const ConditionBin> bins, const std::filesystem::path& path) {
    std::ofstream out = open_csv(path);
    out << "kappa_lo,kappa_hi,channels,errors,symbols,ser,ci95\n";
    for (const auto& b : bins)
        out << b.lo << ',' << b.hi << ',' << b.channels << ',' << b.errors << ',' << b.symbols << ',' << b.ser << ','
            << b.ci95 << '\n';
}

}  // namespace mimo
