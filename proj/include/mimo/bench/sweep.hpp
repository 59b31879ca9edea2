#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mimo/bench/scenario.hpp"

namespace mimo {

struct ResultRow {
    std::string detector;
    std::string label;  ///< K_train tag in robustness studies, empty otherwise
    int n_tx = 0;
    int n_rx = 0;
    int qam_order = 0;
    double snr_db = 0.0;
    std::int64_t samples = 0;
    std::int64_t symbols = 0;
    std::int64_t errors = 0;
    double ser = 0.0;
    double ci95 = 0.0;
    double wall_time = 0.0;  ///< seconds; 0 in deterministic mode
    std::string status = "ok";

    bool ok() const { return status == "ok"; }
};

struct RunOptions {
    int workers = 1;
    bool deterministic = false;
};

/// Every (detector, SNR) point of the scenario.  A detector that cannot be
/// built yields one failure row and the sweep continues.
std::vector<ResultRow> run_sweep(const Scenario& scenario, const RunOptions& options = {});

/// Every (checkpoint, K_test, SNR) point of the scenario's robustness study.
std::vector<ResultRow> run_robustness(const Scenario& scenario, const RunOptions& options = {});

inline constexpr const char* kResultCsvHeader =
    "detector,label,n_tx,n_rx,qam_order,snr_db,samples,symbols,errors,ser,ci95,wall_time,status";

void write_results_csv(std::span<const ResultRow> rows, const std::filesystem::path& path);
void write_results_json(std::span<const ResultRow> rows, const std::filesystem::path& path);
std::string results_csv(std::span<const ResultRow> rows);

}  // namespace mimo
