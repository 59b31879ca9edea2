#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "helpers.hpp"
#include "mimo/bench/complexity.hpp"
#include "mimo/bench/scenario.hpp"
#include "mimo/bench/sweep.hpp"
#include "mimo/detect/linear.hpp"
#include "mimo/gnn/checkpoint.hpp"

using namespace mimo;
using nlohmann::json;

namespace {

std::filesystem::path scratch_dir() {
    const auto d = std::filesystem::temp_directory_path() / "mimo_bench_unit";
    std::filesystem::create_directories(d);
    return d;
}

std::string random_checkpoint(const std::string& name, const std::string& kind) {
    Checkpoint ck;
    ck.params = GnnParams::random(GnnDims{}, 17);
    ck.metadata.detector_kind = kind;
    ck.metadata.qam_order = 4;
    const auto path = scratch_dir() / name;
    save_params(ck, path);
    return path.string();
}

Scenario small_scenario() {
    Scenario s;
    s.detectors = {"mmse", "ep", "bpic"};
    s.n_tx = 2;
    s.n_rx = 3;
    s.snr_min_db = 0.0;
    s.snr_max_db = 6.0;
    s.snr_step_db = 3.0;
    s.samples = 200;
    s.seed = 12;
    return s;
}

// Standard normal tail.
double qfunc(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("complexity estimates") {
    const auto ep = complexity_inputs(256, 256, 16, 10);
    CHECK(complexity_estimate("ep", ep) == 185324032.0);
    const auto gep = complexity_inputs(256, 128, 16, 10);
    CHECK(complexity_estimate("gepnet", gep) == 71497472.0);
    CHECK(ep.m == 4.0);
    for (const auto& name : complexity_detectors()) CHECK(complexity_estimate(name, gep) > 0.0);
    CHECK(complexity_detectors().size() == 9);
    CHECK_THROWS_AS(complexity_estimate("sphere", gep), std::invalid_argument);
    // the counts grow with every size
    const auto bigger = complexity_inputs(256, 128, 16, 20);
    for (const auto& name : {"ep", "bpic", "gepnet", "gpicnet"})
        CHECK(complexity_estimate(name, bigger) > complexity_estimate(name, gep));
}

TEST_CASE("scenario parsing") {
    const json j = json::parse(R"({
        "detectors": ["ep", "gepnet"], "n_tx": 4, "n_rx": 8, "qam_order": 16,
        "snr": {"min": 2, "max": 6, "step": 0.5}, "samples": 50, "seed": 3,
        "models": {"gepnet": "m.bin"}, "overrides": {"ep": {"T": 4, "eta": 0.5}},
        "analysis": {"posterior_metrics": true, "instances": 20, "condition_bins": 3},
        "robustness": {"k_test": [4, 8], "models": [{"label": "4,8", "path": "x.bin"}]}
    })");
    const Scenario s = scenario_from_json(j);
    CHECK(s.detectors == std::vector<std::string>{"ep", "gepnet"});
    CHECK(s.n_tx == 4);
    CHECK(s.qam_order == 16);
    CHECK(s.snr_grid().size() == 9);
    CHECK(s.snr_grid().back() == doctest::Approx(6.0));
    CHECK(s.models.at("gepnet") == "m.bin");
    CHECK(s.overrides.at("ep").iterations == 4);
    CHECK(s.overrides.at("ep").eta == 0.5);
    CHECK_FALSE(s.overrides.at("ep").rounds.has_value());
    CHECK(s.posterior_metrics);
    CHECK(s.metric_instances == 20);
    CHECK(s.k_test == std::vector<int>{4, 8});
    CHECK(s.robustness_models.at(0).detector == "gepnet");

    CHECK_THROWS_AS(scenario_from_json(json::parse(R"({"detector": ["ep"]})")), std::invalid_argument);
    CHECK_THROWS_AS(scenario_from_json(json::parse(R"({"snr": {"lo": 1}})")), std::invalid_argument);
    CHECK_THROWS(scenario_from_json(json::parse(R"({"samples": "many"})")));

    Scenario bad = small_scenario();
    bad.samples = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = small_scenario();
    bad.snr_min_db = 10.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = small_scenario();
    bad.n_tx = 5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("training config from json") {
    const TrainConfig c = train_config_from_json(
        json::parse(R"({"preset": "desk", "detector": "gpicnet", "epochs": 3, "k_train": [4], "T": 5})"));
    CHECK(c.detector_kind == DetectorKind::Gpicnet);
    CHECK(c.epochs == 3);
    CHECK(c.k_train_set == std::vector<int>{4});
    CHECK(c.iterations == 5);
    CHECK(c.batches_per_epoch == TrainConfig::desk(DetectorKind::Gpicnet).batches_per_epoch);
    CHECK_THROWS_AS(train_config_from_json(json::parse(R"({"preset": "huge"})")), std::invalid_argument);
    CHECK_THROWS_AS(train_config_from_json(json::parse(R"({"epoch": 3})")), std::invalid_argument);
}

TEST_CASE("detector registry") {
    const Scenario s = small_scenario();
    for (const auto& name : {"mmse", "ml", "ep", "bpic"}) CHECK(make_detector(name, s)->name() == name);
    CHECK_THROWS_AS(make_detector("zf", s), DetectorError);
    CHECK_THROWS_AS(make_detector("gepnet", s), DetectorError);
    CHECK_THROWS_AS(make_detector("gepnet", s, "/nonexistent/model.bin"), DetectorError);
    const std::string gp = random_checkpoint("gp.bin", "gpicnet");
    CHECK(make_detector("gpicnet", s, gp)->name() == "gpicnet");
    CHECK_THROWS_AS(make_detector("gepnet", s, gp), DetectorError);
    Scenario s16 = s;
    s16.qam_order = 16;
    CHECK_THROWS_AS(make_detector("gpicnet", s16, gp), DetectorError);
}

TEST_CASE("deterministic sweeps are byte identical") {
    Scenario s = small_scenario();
    const auto a = run_sweep(s, {1, true});
    const auto b = run_sweep(s, {2, true});
    REQUIRE(a.size() == 9);
    CHECK(results_csv(a) == results_csv(b));
    CHECK(results_csv(a).rfind(std::string(kResultCsvHeader) + "\n", 0) == 0);
    for (const auto& r : a) {
        CHECK(r.ok());
        CHECK(r.wall_time == 0.0);
        CHECK(r.symbols == 200 * 2);
        CHECK(r.ser == doctest::Approx(static_cast<double>(r.errors) / r.symbols));
    }
    const auto path = scratch_dir() / "sweep.csv";
    write_results_csv(a, path);
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text == results_csv(a));
    write_results_json(a, scratch_dir() / "sweep.json");
    std::ifstream jin(scratch_dir() / "sweep.json");
    const json rows = json::parse(jin);
    CHECK(rows.size() == 9);
}

TEST_CASE("a missing checkpoint yields a failure row and the sweep continues") {
    Scenario s = small_scenario();
    s.detectors = {"gepnet", "mmse"};
    s.models["gepnet"] = (scratch_dir() / "absent.bin").string();
    const auto rows = run_sweep(s, {1, true});
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].detector == "gepnet");
    CHECK_FALSE(rows[0].ok());
    CHECK(rows[0].status.find("absent.bin") != std::string::npos);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].ok());
}

TEST_CASE("robustness rows equal the plain sweep") {
    const std::string path = random_checkpoint("rob.bin", "gepnet");
    Scenario s = small_scenario();
    s.samples = 40;
    s.detectors = {"gepnet"};
    s.models["gepnet"] = path;
    s.k_test = {4};
    s.robustness_models = {{"4,8", "gepnet", path}};
    const auto sweep = run_sweep(s, {1, true});
    const auto rob = run_robustness(s, {1, true});
    REQUIRE(sweep.size() == rob.size());
    for (std::size_t i = 0; i < rob.size(); ++i) {
        CHECK(rob[i].label == "4,8");
        CHECK(rob[i].n_tx == 2);
        CHECK(rob[i].errors == sweep[i].errors);
        CHECK(rob[i].snr_db == sweep[i].snr_db);
    }
    s.k_test.clear();
    CHECK_THROWS_AS(run_robustness(s), std::invalid_argument);
}

TEST_CASE("confidence intervals cover the analytic error rate") {
    // Orthogonal unit-norm columns: the linear detector reduces to a
    // per-dimension matched filter with a Q-function error rate.
    const Constellation c = make_constellation(4);
    const double sigma2 = 0.18;
    const double p_dim = qfunc(c.real_points[1] / std::sqrt(sigma2));
    const double truth = 1.0 - (1.0 - p_dim) * (1.0 - p_dim);
    const int n_tx = 4, instances = 500;
    int covered = 0;
    for (std::uint64_t run = 0; run < 100; ++run) {
        std::int64_t errors = 0, symbols = 0;
        for (int i = 0; i < instances; ++i) {
            RngStream rng(run, static_cast<std::uint64_t>(i));
            Eigen::MatrixXd a(2 * n_tx + 2, 2 * n_tx);
            for (Eigen::Index e = 0; e < a.size(); ++e) a.data()[e] = rng.normal();
            const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() *
                                      Eigen::MatrixXd::Identity(a.rows(), a.cols());
            Eigen::VectorXd x(2 * n_tx), n(a.rows());
            for (int k = 0; k < 2 * n_tx; ++k) x(k) = c.real_points[rng.index(2)];
            for (Eigen::Index k = 0; k < n.size(); ++k) n(k) = rng.normal() * std::sqrt(sigma2);
            SystemInstance inst = make_instance(q, x, n, sigma2, c);
            inst.n_tx = n_tx;
            errors += count_symbol_errors(inst, mmse_detect(inst).x_hard);
            symbols += n_tx;
        }
        const double p = static_cast<double>(errors) / static_cast<double>(symbols);
        if (std::abs(p - truth) <= ser_ci95(errors, symbols)) ++covered;
    }
    CHECK(covered >= 90);
    CHECK(ser_ci95(0, 100) == 0.0);
    CHECK(ser_ci95(50, 100) == doctest::Approx(1.96 * 0.05));
}
