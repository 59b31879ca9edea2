#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "mimo/detect/detector.hpp"

namespace mimo {

/// Linear MMSE estimate (H^T H + sigma^2/Es I)^{-1} H^T y with componentwise slicing.
DetectionResult mmse_detect(const SystemInstance& instance);

class MmseDetector final : public Detector {
public:
    std::string name() const override { return "mmse"; }
    DetectionResult detect(const SystemInstance& instance, bool = false) const override {
        return mmse_detect(instance);
    }
};

inline constexpr std::uint64_t kDefaultMlBudget = std::uint64_t{1} << 24;

struct MlResult {
    Eigen::VectorXd x;
    double objective = 0.0;
};

/// Number of candidates M^K, saturating at UINT64_MAX.
std::uint64_t lattice_size(int alphabet, int users);

/// Visits every x in Omega^K in reflected Gray order (one coordinate changes
/// per step) and reports ||y - Hx||^2.  `visit(x, objective)`.
/// Throws std::length_error naming the required budget when M^K > budget.
void enumerate_lattice(const SystemInstance& instance, std::uint64_t budget,
                       const std::function<void(const Eigen::VectorXd&, double)>& visit);

/// Exhaustive argmin of ||y - Hx||^2; ties resolved to the lexicographically
/// smallest candidate.  The returned objective is recomputed directly.
MlResult ml_oracle(const SystemInstance& instance, std::uint64_t budget = kDefaultMlBudget);

class MlDetector final : public Detector {
public:
    explicit MlDetector(std::uint64_t budget = kDefaultMlBudget) : budget_(budget) {}
    std::string name() const override { return "ml"; }
    DetectionResult detect(const SystemInstance& instance, bool = false) const override;

private:
    std::uint64_t budget_;
};

}  // namespace mimo
