#include "mimo/bench/sweep.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

namespace mimo {

namespace {

ResultRow failure_row(const std::string& detector, const std::string& label, const LinkSetup& link,
                      const std::string& why) {
    ResultRow r;
    r.detector = detector;
    r.label = label;
    r.n_tx = link.n_tx;
    r.n_rx = link.n_rx;
    r.qam_order = link.qam_order;
    r.status = "error: " + why;
    return r;
}

void sweep_detector(const Detector& det, const std::string& name, const std::string& label, const LinkSetup& link,
                    const Scenario& s, const RunOptions& opt, std::vector<ResultRow>& rows) {
    for (double snr : s.snr_grid()) {
        ResultRow r;
        r.detector = name;
        r.label = label;
        r.n_tx = link.n_tx;
        r.n_rx = link.n_rx;
        r.qam_order = link.qam_order;
        r.snr_db = snr;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const std::vector<int> errs = instance_errors(det, link, snr, s.samples, s.seed, opt.workers);
            for (int e : errs) r.errors += e;
        } catch (const std::exception& e) {
            rows.push_back(failure_row(name, label, link, e.what()));
            rows.back().snr_db = snr;
            continue;
        }
        r.samples = s.samples;
        r.symbols = static_cast<std::int64_t>(s.samples) * link.n_tx;
        r.ser = static_cast<double>(r.errors) / static_cast<double>(r.symbols);
        r.ci95 = ser_ci95(r.errors, r.symbols);
        if (!opt.deterministic)
            r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rows.push_back(r);
    }
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::vector<ResultRow> run_sweep(const Scenario& scenario, const RunOptions& options) {
    scenario.validate();
    std::vector<ResultRow> rows;
    const LinkSetup link = scenario.link();
    for (const std::string& name : scenario.detectors) {
        std::unique_ptr<Detector> det;
        try {
            det = make_detector(name, scenario);
        } catch (const std::exception& e) {
            rows.push_back(failure_row(name, "", link, e.what()));
            continue;
        }
        sweep_detector(*det, name, "", link, scenario, options, rows);
    }
    return rows;
}

std::vector<ResultRow> run_robustness(const Scenario& scenario, const RunOptions& options) {
    scenario.validate();
    if (scenario.k_test.empty() || scenario.robustness_models.empty())
        throw std::invalid_argument("robustness: need k_test and at least one model");
    std::vector<ResultRow> rows;
    for (const RobustnessModel& m : scenario.robustness_models) {
        std::unique_ptr<Detector> det;
        std::string why;
        try {
            det = make_detector(m.detector, scenario, m.path);
        } catch (const std::exception& e) {
            why = e.what();
        }
        for (int k : scenario.k_test) {
            LinkSetup link = scenario.link();
            link.n_tx = k / 2;
            if (k < 2 || k % 2 != 0 || link.n_tx > link.n_rx) {
                rows.push_back(failure_row(m.detector, m.label, link, "invalid K_test " + std::to_string(k)));
                continue;
            }
            if (!det) {
                rows.push_back(failure_row(m.detector, m.label, link, why));
                continue;
            }
            sweep_detector(*det, m.detector, m.label, link, scenario, options, rows);
        }
    }
    return rows;
}

std::string results_csv(std::span<const ResultRow> rows) {
    std::ostringstream out;
    out.precision(10);
    out << kResultCsvHeader << '\n';
    for (const auto& r : rows)
        out << csv_escape(r.detector) << ',' << csv_escape(r.label) << ',' << r.n_tx << ',' << r.n_rx << ','
            << r.qam_order << ',' << r.snr_db << ',' << r.samples << ',' << r.symbols << ',' << r.errors << ','
            << r.ser << ',' << r.ci95 << ',' << r.wall_time << ',' << csv_escape(r.status) << '\n';
    return out.str();
}

void write_results_csv(std::span<const ResultRow> rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << results_csv(rows);
}

void write_results_json(std::span<const ResultRow> rows, const std::filesystem::path& path) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows)
        arr.push_back({{"detector", r.detector},
                       {"label", r.label},
                       {"n_tx", r.n_tx},
                       {"n_rx", r.n_rx},
                       {"qam_order", r.qam_order},
                       {"snr_db", r.snr_db},
                       {"samples", r.samples},
                       {"symbols", r.symbols},
                       {"errors", r.errors},
                       {"ser", r.ser},
                       {"ci95", r.ci95},
                       {"wall_time", r.wall_time},
                       {"status", r.status}});
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << arr.dump(2) << '\n';
}

}  // namespace mimo
