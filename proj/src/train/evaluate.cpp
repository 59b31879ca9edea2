#include "mimo/train/evaluate.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

namespace mimo {

RngStream evaluation_stream(std::uint64_t seed, const LinkSetup& link, double snr_db, std::uint64_t index) {
    const auto milli_db = static_cast<std::uint64_t>(static_cast<std::int64_t>(std::llround(snr_db * 1000.0)));
    const std::uint64_t id = (0x5e5ULL << 48) ^ (static_cast<std::uint64_t>(link.n_tx) << 32) ^ (milli_db & 0xffffffffULL);
    return RngStream(seed, id).split(index);
}

std::vector<int> instance_errors(const Detector& detector, const LinkSetup& link, double snr_db, int samples,
                                 std::uint64_t seed, int workers) {
    if (samples < 1) throw std::invalid_argument("evaluation needs at least one sample");
    const Constellation omega = make_constellation(link.qam_order);
    std::vector<int> errors(static_cast<std::size_t>(samples));
    auto run = [&](int begin, int stride) {
        for (int i = begin; i < samples; i += stride) {
            RngStream rng = evaluation_stream(seed, link, snr_db, static_cast<std::uint64_t>(i));
            const SystemInstance inst = sample_instance(link.n_tx, link.n_rx, omega, snr_db, rng);
            errors[static_cast<std::size_t>(i)] = count_symbol_errors(inst, detector.detect(inst).x_hard);
        }
    };
    workers = std::max(1, std::min(workers, samples));
    if (workers == 1) {
        run(0, 1);
        return errors;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                run(w, workers);
            } catch (...) {
                failures[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& f : failures)
        if (f) std::rethrow_exception(f);
    return errors;
}

double ser_ci95(std::int64_t errors, std::int64_t symbols) {
    if (symbols <= 0) return 0.0;
    const double p = static_cast<double>(errors) / static_cast<double>(symbols);
    return 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(symbols));
}

std::vector<SerPoint> evaluate_ser(const Detector& detector, const LinkSetup& link, std::span<const double> snr_db,
                                   int samples, std::uint64_t seed, int workers) {
    std::vector<SerPoint> out;
    for (double snr : snr_db) {
        const std::vector<int> errs = instance_errors(detector, link, snr, samples, seed, workers);
        SerPoint p;
        p.snr_db = snr;
        for (int e : errs) p.errors += e;
        p.symbols = static_cast<std::int64_t>(samples) * link.n_tx;
        p.ser = static_cast<double>(p.errors) / static_cast<double>(p.symbols);
        p.ci95 = ser_ci95(p.errors, p.symbols);
        out.push_back(p);
    }
    return out;
}

std::vector<SerPoint> evaluate_ser(std::shared_ptr<const GnnParams> params, DetectorKind kind,
                                   const LinkSetup& link, std::span<const double> snr_db, int samples,
                                   std::uint64_t seed, int workers) {
    if (kind == DetectorKind::Gepnet) return evaluate_ser(GepnetDetector(std::move(params)), link, snr_db, samples, seed, workers);
    return evaluate_ser(GpicnetDetector(std::move(params)), link, snr_db, samples, seed, workers);
}

}  // namespace mimo
