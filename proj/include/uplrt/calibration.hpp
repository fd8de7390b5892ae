#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "uplrt/estimation.hpp"
#include "uplrt/null_dist.hpp"

namespace uplrt {

struct MomentRecord {
    std::size_t n = 0;
    TestId stat = TestId::Rn1;
    double mean_stat = 0.0;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
    std::size_t failures = 0;
};

// Simulated first moments of the four statistics under the standard
// bivariate normal null, for each n in n_grid. Deterministic given seed and
// independent of thread count.
std::vector<MomentRecord> estimate_moments(const std::vector<std::size_t>& n_grid,
                                           std::size_t reps, std::uint64_t seed,
                                           const FitOptions& fit_opts = {},
                                           int threads = 1);

struct CalibrationTargets {
    std::vector<std::size_t> n;
    std::vector<double> p_n, r_n, p_star_n, r_star_n;
    std::size_t clip_events = 0;  // weight targets clipped into [0.5, 1]
    double mean_R = 0.0, mean_Rstar = 0.0;
};

CalibrationTargets moments_to_targets(const std::vector<MomentRecord>& records,
                                      double mean_R, double mean_Rstar);

double reference_mean_R(std::size_t draws, std::uint64_t seed);
double reference_mean_Rstar(std::size_t draws, std::uint64_t seed);

struct PowerLawFit {
    double intercept = 0.0;  // fixed at 0.5 or 1
    double a = 0.0;
    double b = 0.0;
    double rss = 0.0;
};

// Least squares for y = c + a n^-b, profiling b over a bracketed 1-D search.
PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& points,
                          double intercept_c);

}  // namespace uplrt
