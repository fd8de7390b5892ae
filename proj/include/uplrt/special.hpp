#pragma once

#include <cmath>
#include <stdexcept>

namespace uplrt {

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
inline constexpr double kSqrtTwo = 1.4142135623730950488016887242097;

inline double norm_pdf(double z) {
    return std::exp(-0.5 * z * z - 0.5 * kLogTwoPi);
}

inline double log_norm_pdf(double z) {
    return -0.5 * z * z - 0.5 * kLogTwoPi;
}

// Standard normal c.d.f. erfc keeps full relative accuracy in the lower
// tail; symmetry handles the upper tail.
inline double norm_cdf(double z) {
    return 0.5 * std::erfc(-z / kSqrtTwo);
}

// P(Z > z)
inline double norm_sf(double z) {
    return 0.5 * std::erfc(z / kSqrtTwo);
}

// P(chi^2_1 >= t) = 2 P(Z > sqrt(t))
inline double chisq1_tail(double t) {
    if (t < 0.0) throw std::domain_error("chisq1_tail: t must be >= 0");
    return std::erfc(std::sqrt(0.5 * t));
}

inline double chisq1_cdf(double t) {
    if (t < 0.0) throw std::domain_error("chisq1_cdf: t must be >= 0");
    return std::erf(std::sqrt(0.5 * t));
}

// log(exp(a) + exp(b)) without overflow
inline double log_add_exp(double a, double b) {
    const double m = a > b ? a : b;
    if (m == -INFINITY) return -INFINITY;
    return m + std::log1p(std::exp((a > b ? b : a) - m));
}

}  // namespace uplrt
