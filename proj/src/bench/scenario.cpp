#include "mimo/bench/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "mimo/detect/bpic.hpp"
#include "mimo/detect/ep.hpp"
#include "mimo/detect/linear.hpp"
#include "mimo/gnn/checkpoint.hpp"
#include "mimo/neural/neural.hpp"

namespace mimo {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) throw std::invalid_argument("unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::vector<double> Scenario::snr_grid() const {
    std::vector<double> grid;
    if (!(snr_step_db > 0.0)) {
        if (snr_min_db == snr_max_db) grid.push_back(snr_min_db);
        return grid;
    }
    for (int i = 0;; ++i) {
        const double s = snr_min_db + i * snr_step_db;
        if (s > snr_max_db + 1e-9) break;
        grid.push_back(s);
    }
    return grid;
}

void Scenario::validate() const {
    if (snr_grid().empty()) throw std::invalid_argument("scenario: SNR grid is empty");
    if (samples < 1) throw std::invalid_argument("scenario: samples must be at least 1");
    if (n_tx < 1 || n_rx < n_tx) throw std::invalid_argument("scenario: need 1 <= n_tx <= n_rx");
    make_constellation(qam_order);
}

Scenario scenario_from_json(const json& j) {
    reject_unknown(j, {"detectors", "n_tx", "n_rx", "qam_order", "snr", "samples", "seed", "models", "overrides",
                       "ml_budget", "analysis", "robustness"},
                   "scenario");
    Scenario s;
    read(j, "detectors", s.detectors);
    read(j, "n_tx", s.n_tx);
    read(j, "n_rx", s.n_rx);
    read(j, "qam_order", s.qam_order);
    if (j.contains("snr")) {
        const json& g = j.at("snr");
        reject_unknown(g, {"min", "max", "step"}, "snr");
        read(g, "min", s.snr_min_db);
        s.snr_max_db = s.snr_min_db;
        read(g, "max", s.snr_max_db);
        read(g, "step", s.snr_step_db);
    }
    read(j, "samples", s.samples);
    read(j, "seed", s.seed);
    read(j, "models", s.models);
    read(j, "ml_budget", s.ml_budget);
    if (j.contains("overrides")) {
        for (const auto& [name, o] : j.at("overrides").items()) {
            reject_unknown(o, {"T", "eta", "L"}, "overrides." + name);
            DetectorOverrides d;
            if (o.contains("T")) d.iterations = o.at("T").get<int>();
            if (o.contains("eta")) d.eta = o.at("eta").get<double>();
            if (o.contains("L")) d.rounds = o.at("L").get<int>();
            s.overrides[name] = d;
        }
    }
    if (j.contains("analysis")) {
        const json& a = j.at("analysis");
        reject_unknown(a, {"posterior_metrics", "instances", "condition_bins", "condition_channels",
                           "condition_draws", "condition_min", "condition_max"},
                       "analysis");
        read(a, "posterior_metrics", s.posterior_metrics);
        read(a, "instances", s.metric_instances);
        read(a, "condition_bins", s.condition_bins);
        read(a, "condition_channels", s.condition_channels);
        read(a, "condition_draws", s.condition_draws);
        read(a, "condition_min", s.condition_min);
        read(a, "condition_max", s.condition_max);
    }
    if (j.contains("robustness")) {
        const json& r = j.at("robustness");
        reject_unknown(r, {"k_test", "models"}, "robustness");
        read(r, "k_test", s.k_test);
        if (r.contains("models"))
            for (const json& m : r.at("models")) {
                reject_unknown(m, {"label", "detector", "path"}, "robustness.models");
                RobustnessModel rm;
                read(m, "label", rm.label);
                read(m, "detector", rm.detector);
                read(m, "path", rm.path);
                s.robustness_models.push_back(rm);
            }
    }
    s.validate();
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read scenario " + path.string());
    return scenario_from_json(json::parse(in));
}

TrainConfig train_config_from_json(const json& j) {
    reject_unknown(j, {"preset", "detector", "epochs", "batches_per_epoch", "batch_size", "lr", "plateau_factor",
                       "plateau_patience", "plateau_threshold", "snr_min_db", "snr_max_db", "k_train", "n_rx",
                       "qam_order", "val_samples", "seed", "T", "eta", "truncate_observation", "dims", "workers"},
                   "training config");
    const DetectorKind kind = parse_detector_kind(j.value("detector", std::string("gepnet")));
    const std::string preset = j.value("preset", std::string("full"));
    TrainConfig c;
    if (preset == "full")
        c = TrainConfig::full(kind);
    else if (preset == "desk")
        c = TrainConfig::desk(kind);
    else
        throw std::invalid_argument("unknown training preset '" + preset + "'");
    read(j, "epochs", c.epochs);
    read(j, "batches_per_epoch", c.batches_per_epoch);
    read(j, "batch_size", c.batch_size);
    read(j, "lr", c.lr);
    read(j, "plateau_factor", c.plateau_factor);
    read(j, "plateau_patience", c.plateau_patience);
    read(j, "plateau_threshold", c.plateau_threshold);
    read(j, "snr_min_db", c.snr_min_db);
    read(j, "snr_max_db", c.snr_max_db);
    read(j, "k_train", c.k_train_set);
    read(j, "n_rx", c.n_rx);
    read(j, "qam_order", c.qam_order);
    read(j, "val_samples", c.val_samples);
    read(j, "seed", c.seed);
    read(j, "T", c.iterations);
    read(j, "eta", c.eta);
    read(j, "truncate_observation", c.truncate_observation);
    read(j, "workers", c.workers);
    if (j.contains("dims")) {
        const json& d = j.at("dims");
        reject_unknown(d, {"message", "hidden1", "hidden2", "rounds"}, "dims");
        read(d, "message", c.dims.message);
        read(d, "hidden1", c.dims.hidden1);
        read(d, "hidden2", c.dims.hidden2);
        read(d, "rounds", c.dims.rounds);
    }
    c.dims.alphabet = make_constellation(c.qam_order).size();
    c.validate();
    return c;
}

std::vector<std::string> registered_detectors() { return {"mmse", "ml", "ep", "bpic", "gepnet", "gpicnet"}; }

std::unique_ptr<Detector> make_detector(const std::string& name, const Scenario& scenario,
                                        const std::string& model_path) {
    const auto it = scenario.overrides.find(name);
    const DetectorOverrides ov = it == scenario.overrides.end() ? DetectorOverrides{} : it->second;

    if (name == "mmse") return std::make_unique<MmseDetector>();
    if (name == "ml") return std::make_unique<MlDetector>(scenario.ml_budget);
    if (name == "ep") {
        EpConfig c;
        c.iterations = ov.iterations.value_or(c.iterations);
        c.eta = ov.eta.value_or(c.eta);
        return std::make_unique<EpDetector>(c);
    }
    if (name == "bpic") {
        BpicConfig c;
        c.iterations = ov.iterations.value_or(c.iterations);
        return std::make_unique<BpicDetector>(c);
    }
    if (name != "gepnet" && name != "gpicnet") throw DetectorError("unknown detector '" + name + "'");

    std::string path = model_path;
    if (path.empty()) {
        const auto m = scenario.models.find(name);
        if (m == scenario.models.end()) throw DetectorError(name + ": no checkpoint configured");
        path = m->second;
    }
    std::shared_ptr<const GnnParams> params;
    try {
        Checkpoint ck = load_params(path);
        if (!ck.metadata.detector_kind.empty() && ck.metadata.detector_kind != name)
            throw DetectorError(name + ": checkpoint " + path + " was trained for " + ck.metadata.detector_kind);
        if (ck.params.dims.alphabet != make_constellation(scenario.qam_order).size())
            throw DetectorError(name + ": checkpoint " + path + " does not match the constellation");
        params = std::make_shared<const GnnParams>(std::move(ck.params));
    } catch (const CheckpointError& e) {
        throw DetectorError(name + ": " + e.what());
    }
    if (name == "gepnet") {
        GepnetConfig c;
        c.iterations = ov.iterations.value_or(c.iterations);
        c.eta = ov.eta.value_or(c.eta);
        c.rounds = ov.rounds.value_or(c.rounds);
        return std::make_unique<GepnetDetector>(params, c);
    }
    GpicnetConfig c;
    c.iterations = ov.iterations.value_or(c.iterations);
    c.rounds = ov.rounds.value_or(c.rounds);
    return std::make_unique<GpicnetDetector>(params, c);
}

}  // namespace mimo
