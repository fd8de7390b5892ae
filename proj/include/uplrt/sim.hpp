#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "uplrt/estimation.hpp"
#include "uplrt/null_dist.hpp"
#include "uplrt/rng.hpp"

namespace uplrt {

UnorderedDataset generate_dataset(std::size_t n, const Theta& theta, Rng& rng);

enum class CalibrationMode { Raw, Adjusted, Both };

struct ScenarioConfig {
    std::size_t n = 75;
    Theta theta{0.0, 0.0, 1.0, 1.0, 0.0};
    std::size_t reps = 10000;
    std::vector<double> levels{0.10, 0.05, 0.01};  // ascending not required on input
    std::uint64_t seed = 20240101;
    std::array<bool, 4> which_tests{true, true, true, true};
    CalibrationMode mode = CalibrationMode::Both;
    FitOptions fit_options;
    int threads = 1;
};

struct RejectionCell {
    double percent = 0.0;
    double std_error = 0.0;  // in percentage points
};

struct RejectionTable {
    ScenarioConfig config;
    std::vector<double> levels;  // sorted ascending
    // [test][level] rejection percentages
    std::array<std::vector<RejectionCell>, 4> raw;
    std::array<std::vector<RejectionCell>, 4> adjusted;
    std::size_t failures = 0;
    std::size_t completed = 0;
};

RejectionTable rejection_study(const ScenarioConfig& cfg, const RLaw& law,
                               const CoefficientSet& cs);

}  // namespace uplrt
