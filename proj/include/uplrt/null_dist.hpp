#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace uplrt {

enum class TestId { Rn1 = 0, Rn2 = 1, Rn1Star = 2, Rn2Star = 3 };

const char* test_name(TestId id);

// P(T >= t) for the mixture weight*chi2_1 + (1-weight)*chi2_0
double chibar_tail(double t, double weight);

// One draw of the Theorem-1 limit R given w = (w1, w2, w3):
//   sup over (x1, x2) of 2(x1^2 w1 + x2^2 w2 + 2 x1 x2 w3)
//                       - (x1^4 + x2^4 + 4 x1^2 x2^2)
double sample_R(const std::array<double, 3>& w);

// Monte-Carlo reference table for the law of R (no closed form exists).
struct RLaw {
    std::vector<double> draws;  // sorted ascending
    std::uint64_t seed = 0;
    std::size_t size = 0;

    static RLaw generate(std::size_t size, std::uint64_t seed);

    // cached under dir (created if needed); regenerates on any mismatch
    static RLaw load_or_generate(std::size_t size, std::uint64_t seed,
                                 const std::string& cache_dir);

    void save(const std::string& path) const;
    static bool try_load(const std::string& path, std::size_t size,
                         std::uint64_t seed, RLaw& out);
};

inline constexpr std::size_t kDefaultRTableSize = 200000;
inline constexpr std::uint64_t kDefaultRTableSeed = 271828;

// env var naming the cache directory; default ".uplrt-cache"
std::string rlaw_cache_dir();

// (k+1)/(N+1)-style tail estimate from the sorted table
double r_tail(double t, const RLaw& law);
double r_quantile(double alpha, const RLaw& law);

// c.d.f. of R* = max{w1^2 + (w2+)^2, w1^2 + (w3+)^2} by adaptive quadrature
double rstar_cdf(double x);
double rstar_tail(double x);
double rstar_quantile(double alpha);

enum class AdjKind { Weight, Scale };

struct AdjustmentCoefficients {
    double a = 0.0;
    double b = 1.0;
    AdjKind kind = AdjKind::Weight;

    // weight 0.5 + a n^-b, clipped into [0.5, 1]
    double weight_at(std::size_t n, bool* clipped = nullptr) const;
    // scale 1 + a n^-b, floored at 1
    double scale_at(std::size_t n) const;
};

struct CoefficientSet {
    std::array<AdjustmentCoefficients, 4> coeffs;

    static CoefficientSet paper_defaults();
    const AdjustmentCoefficients& operator[](TestId id) const {
        return coeffs[static_cast<int>(id)];
    }
    AdjustmentCoefficients& operator[](TestId id) {
        return coeffs[static_cast<int>(id)];
    }
};

struct PValue {
    double p = 1.0;
    bool weight_clipped = false;
};

PValue adjusted_pvalue(TestId id, double t, std::size_t n,
                       const CoefficientSet& cs, const RLaw& law);
double raw_pvalue(TestId id, double t, const RLaw& law);

}  // namespace uplrt
