#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mimo/detect/detector.hpp"
#include "mimo/detect/linear.hpp"
#include "mimo/train/evaluate.hpp"
#include "mimo/train/trainer.hpp"

namespace mimo {

/// Per-detector iteration overrides; unset fields keep the detector defaults.
struct DetectorOverrides {
    std::optional<int> iterations;
    std::optional<double> eta;
    std::optional<int> rounds;
};

/// One checkpoint of a robustness study, identified by its K_train label.
struct RobustnessModel {
    std::string label;
    std::string detector = "gepnet";
    std::string path;
};

struct Scenario {
    std::vector<std::string> detectors;
    int n_tx = 8;
    int n_rx = 8;
    int qam_order = 4;
    double snr_min_db = 0.0;
    double snr_max_db = 10.0;
    double snr_step_db = 2.0;
    int samples = 1000;
    std::uint64_t seed = 1;
    std::map<std::string, std::string> models;  ///< detector name -> checkpoint path
    std::map<std::string, DetectorOverrides> overrides;
    std::uint64_t ml_budget = kDefaultMlBudget;

    // Analysis toggles.
    bool posterior_metrics = false;
    std::int64_t metric_instances = 1000;
    int condition_bins = 0;
    int condition_channels = 500;
    int condition_draws = 100;
    double condition_min = 1.0;
    double condition_max = 100.0;

    // Robustness study.
    std::vector<int> k_test;  ///< real-valued user counts
    std::vector<RobustnessModel> robustness_models;

    LinkSetup link() const { return {n_tx, n_rx, qam_order}; }
    /// min, min + step, ... up to max (inclusive within 1e-9).
    std::vector<double> snr_grid() const;
    /// Throws std::invalid_argument on an empty grid or samples < 1.
    void validate() const;
};

Scenario scenario_from_json(const nlohmann::json& j);
Scenario load_scenario(const std::filesystem::path& path);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// Failure to construct a detector (unknown name, missing or incompatible
/// checkpoint).  Sweeps report it per detector and continue.
class DetectorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Builds a detector by name: mmse, ml, ep, bpic, gepnet, gpicnet.  Learned
/// detectors load `model_path` and check it against the constellation.
std::unique_ptr<Detector> make_detector(const std::string& name, const Scenario& scenario,
                                        const std::string& model_path = {});

std::vector<std::string> registered_detectors();

}  // namespace mimo
