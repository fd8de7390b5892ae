#include "uplrt/null_dist.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "uplrt/rng.hpp"
#include "uplrt/special.hpp"

namespace uplrt {

const char* test_name(TestId id) {
    switch (id) {
        case TestId::Rn1: return "Rn1";
        case TestId::Rn2: return "Rn2";
        case TestId::Rn1Star: return "Rn1*";
        case TestId::Rn2Star: return "Rn2*";
    }
    return "?";
}

double chibar_tail(double t, double weight) {
    if (t < 0.0) throw std::domain_error("chibar_tail: t must be >= 0");
    if (weight < 0.5 || weight > 1.0)
        throw std::domain_error("chibar_tail: weight must be in [0.5, 1]");
    if (t == 0.0) return 1.0;
    return weight * chisq1_tail(t);
}

namespace {

// In polar coordinates x = (r cos a, r sin a) the objective becomes
// 2 r^2 h(a) - r^4 k(a) with h = w1 c^2 + w2 s^2 + 2 c s w3 and
// k = 1 + 2 c^2 s^2; for fixed a the optimum over r is h^2/k when h > 0.
struct PolarObjective {
    double w1, w2, w3;
    double operator()(double a) const {
        const double c = std::cos(a), s = std::sin(a);
        const double h = w1 * c * c + w2 * s * s + 2.0 * c * s * w3;
        if (h <= 0.0) return 0.0;
        const double k = 1.0 + 2.0 * c * c * s * s;
        return h * h / k;
    }
};

double golden_max(const PolarObjective& f, double lo, double hi) {
    constexpr double invphi = 0.6180339887498948482;
    double a = lo, b = hi;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > 1e-10) {
        if (f1 < f2) {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        } else {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        }
    }
    return std::max(f1, f2);
}

}  // namespace

double sample_R(const std::array<double, 3>& w) {
    const PolarObjective f{w[0], w[1], w[2]};
    // the objective has period pi in the angle
    constexpr int kGrid = 128;
    constexpr double kPi = 3.1415926535897932384626433832795;
    constexpr double step = kPi / kGrid;
    double vals[kGrid];
    for (int i = 0; i < kGrid; ++i) vals[i] = f(i * step);
    double best = 0.0;
    for (int i = 0; i < kGrid; ++i) {
        const double prev = vals[(i + kGrid - 1) % kGrid];
        const double next = vals[(i + 1) % kGrid];
        if (vals[i] >= prev && vals[i] >= next && vals[i] > 0.0) {
            const double refined = golden_max(f, (i - 1) * step, (i + 1) * step);
            best = std::max(best, refined);
        }
    }
    return best;
}

RLaw RLaw::generate(std::size_t size, std::uint64_t seed) {
    RLaw law;
    law.seed = seed;
    law.size = size;
    law.draws.resize(size);
    for (std::size_t i = 0; i < size; ++i) {
        Rng rng(derive_seed(seed, i));
        law.draws[i] = sample_R({rng.next_normal(), rng.next_normal(),
                                 rng.next_normal()});
    }
    std::sort(law.draws.begin(), law.draws.end());
    return law;
}

namespace {
// bump when the sample_R inner optimizer changes; invalidates cached tables
constexpr std::uint32_t kRLawFormatVersion = 2;
constexpr char kRLawMagic[8] = {'U', 'P', 'R', 'L', 'A', 'W', '0', '\0'};
}  // namespace

void RLaw::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("RLaw::save: cannot open " + path);
    out.write(kRLawMagic, sizeof(kRLawMagic));
    out.write(reinterpret_cast<const char*>(&kRLawFormatVersion), 4);
    out.write(reinterpret_cast<const char*>(&seed), 8);
    const std::uint64_t sz = size;
    out.write(reinterpret_cast<const char*>(&sz), 8);
    out.write(reinterpret_cast<const char*>(draws.data()),
              static_cast<std::streamsize>(draws.size() * sizeof(double)));
}

bool RLaw::try_load(const std::string& path, std::size_t size, std::uint64_t seed,
                    RLaw& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    char magic[8];
    std::uint32_t version;
    std::uint64_t file_seed, file_size;
    in.read(magic, 8);
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&file_seed), 8);
    in.read(reinterpret_cast<char*>(&file_size), 8);
    if (!in || std::memcmp(magic, kRLawMagic, 8) != 0
        || version != kRLawFormatVersion || file_seed != seed || file_size != size)
        return false;
    out.seed = seed;
    out.size = size;
    out.draws.resize(size);
    in.read(reinterpret_cast<char*>(out.draws.data()),
            static_cast<std::streamsize>(size * sizeof(double)));
    return static_cast<bool>(in);
}

std::string rlaw_cache_dir() {
    if (const char* dir = std::getenv("UPLRT_CACHE_DIR")) return dir;
    return ".uplrt-cache";
}

RLaw RLaw::load_or_generate(std::size_t size, std::uint64_t seed,
                            const std::string& cache_dir) {
    namespace fs = std::filesystem;
    char name[96];
    std::snprintf(name, sizeof(name), "rlaw_v%u_s%llu_n%zu.bin", kRLawFormatVersion,
                  static_cast<unsigned long long>(seed), size);
    const fs::path path = fs::path(cache_dir) / name;
    RLaw law;
    if (try_load(path.string(), size, seed, law)) return law;
    law = generate(size, seed);
    std::error_code ec;
    fs::create_directories(cache_dir, ec);
    if (!ec) {
        try {
            law.save(path.string());
        } catch (const std::exception&) {
            // cache is best-effort
        }
    }
    return law;
}

double r_tail(double t, const RLaw& law) {
    if (law.draws.empty()) throw std::logic_error("r_tail: empty table");
    if (t < 0.0) throw std::domain_error("r_tail: t must be >= 0");
    const auto it = std::lower_bound(law.draws.begin(), law.draws.end(), t);
    const std::size_t k = static_cast<std::size_t>(law.draws.end() - it);
    return static_cast<double>(k + 1) / static_cast<double>(law.draws.size() + 1);
}

double r_quantile(double alpha, const RLaw& law) {
    if (law.draws.empty()) throw std::logic_error("r_quantile: empty table");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::domain_error("r_quantile: alpha must be in (0,1)");
    const std::size_t n = law.draws.size();
    double idx = std::ceil(alpha * static_cast<double>(n + 1)) - 1.0;
    idx = std::clamp(idx, 0.0, static_cast<double>(n - 1));
    return law.draws[static_cast<std::size_t>(idx)];
}

namespace {

// adaptive Simpson on [a, b]
template <typename F>
double adapt_simpson(const F& f, double a, double b, double fa, double fm,
                     double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adapt_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
         + adapt_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <typename F>
double integrate(const F& f, double a, double b, double tol) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adapt_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace

double rstar_cdf(double x) {
    if (x < 0.0) throw std::domain_error("rstar_cdf: x must be >= 0");
    if (x == 0.0) return 0.0;
    // P(R* <= x) = int_0^x Phi^2(sqrt(x-y)) (2 pi y)^{-1/2} e^{-y/2} dy;
    // the substitution y = u^2 removes the endpoint singularity.
    constexpr double kSqrtTwoOverPi = 0.79788456080286535587989211986876;
    const double s = std::sqrt(x);
    auto integrand = [x](double u) {
        const double d = x - u * u;
        const double phi = norm_cdf(std::sqrt(d > 0.0 ? d : 0.0));
        return phi * phi * kSqrtTwoOverPi * std::exp(-0.5 * u * u);
    };
    return integrate(integrand, 0.0, s, 1e-10);
}

double rstar_tail(double x) {
    return 1.0 - rstar_cdf(x);
}

double rstar_quantile(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::domain_error("rstar_quantile: alpha must be in (0,1)");
    double lo = 0.0, hi = 1.0;
    while (rstar_cdf(hi) < alpha) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) throw std::runtime_error("rstar_quantile: bracket failed");
    }
    while (hi - lo > 1e-10 * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        (rstar_cdf(mid) < alpha ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double AdjustmentCoefficients::weight_at(std::size_t n, bool* clipped) const {
    double w = 0.5 + a * std::pow(static_cast<double>(n), -b);
    bool clip = false;
    if (w > 1.0) { w = 1.0; clip = true; }
    if (w < 0.5) { w = 0.5; clip = true; }
    if (clipped) *clipped = clip;
    return w;
}

double AdjustmentCoefficients::scale_at(std::size_t n) const {
    const double r = 1.0 + a * std::pow(static_cast<double>(n), -b);
    return r < 1.0 ? 1.0 : r;
}

CoefficientSet CoefficientSet::paper_defaults() {
    CoefficientSet cs;
    cs[TestId::Rn1] = {1.440, 0.676, AdjKind::Weight};
    cs[TestId::Rn2] = {4.589, 1.163, AdjKind::Scale};
    cs[TestId::Rn1Star] = {1.332, 0.492, AdjKind::Weight};
    cs[TestId::Rn2Star] = {6.325, 1.176, AdjKind::Scale};
    return cs;
}

PValue adjusted_pvalue(TestId id, double t, std::size_t n,
                       const CoefficientSet& cs, const RLaw& law) {
    if (t < 0.0) throw std::domain_error("adjusted_pvalue: t must be >= 0");
    if (n < 3) throw std::domain_error("adjusted_pvalue: n must be >= 3");
    const AdjustmentCoefficients& c = cs[id];
    PValue out;
    switch (id) {
        case TestId::Rn1:
        case TestId::Rn1Star: {
            const double w = c.weight_at(n, &out.weight_clipped);
            out.p = chibar_tail(t, w);
            break;
        }
        case TestId::Rn2:
            out.p = r_tail(t / c.scale_at(n), law);
            break;
        case TestId::Rn2Star:
            out.p = rstar_tail(t / c.scale_at(n));
            break;
    }
    return out;
}

double raw_pvalue(TestId id, double t, const RLaw& law) {
    if (t < 0.0) throw std::domain_error("raw_pvalue: t must be >= 0");
    switch (id) {
        case TestId::Rn1:
        case TestId::Rn1Star:
            return chibar_tail(t, 0.5);
        case TestId::Rn2:
            return r_tail(t, law);
        case TestId::Rn2Star:
            return rstar_tail(t);
    }
    return 1.0;
}

}  // namespace uplrt
