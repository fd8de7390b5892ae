#include "uplrt/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "uplrt/rng.hpp"
#include "uplrt/sim.hpp"

namespace uplrt {

namespace {

struct ReplicateStats {
    double stat[4] = {0, 0, 0, 0};
    bool ok = false;
};

// Per-replicate results are stored and reduced in replicate order so the
// totals are bit-identical regardless of the thread count.
void moment_replicate(std::size_t n, std::uint64_t rep_seed,
                      const FitOptions& base_opts, ReplicateStats& out) {
    Rng rng(rep_seed);
    const Theta std_theta(0.0, 0.0, 1.0, 1.0, 0.0);
    const UnorderedDataset ds = generate_dataset(n, std_theta, rng);
    FitOptions opts = base_opts;
    opts.seed = derive_seed(rep_seed, 1);
    try {
        const FitResult null0 = fit(ds, Constraint::NullRho0, opts);
        const FitResult eq0 = fit(ds, Constraint::EqvarRho0, opts);
        const FitResult fr0 = fit(ds, Constraint::FreeRho0, opts);
        const FitResult nulls = fit(ds, Constraint::NullRhoFree, opts);
        const FitResult eqs = fit(ds, Constraint::EqvarRhoFree, opts);
        const FitResult frs = fit(ds, Constraint::Free, opts);
        out.stat[0] = std::max(0.0, 2.0 * (eq0.loglik - null0.loglik));
        out.stat[1] = std::max(0.0, 2.0 * (fr0.loglik - null0.loglik));
        out.stat[2] = std::max(0.0, 2.0 * (eqs.loglik - nulls.loglik));
        out.stat[3] = std::max(0.0, 2.0 * (frs.loglik - nulls.loglik));
        out.ok = true;
    } catch (const std::exception&) {
        out.ok = false;
    }
}

}  // namespace

std::vector<MomentRecord> estimate_moments(const std::vector<std::size_t>& n_grid,
                                           std::size_t reps, std::uint64_t seed,
                                           const FitOptions& fit_opts,
                                           int threads) {
    if (reps < 1) throw std::invalid_argument("estimate_moments: reps must be >= 1");
    for (std::size_t n : n_grid)
        if (n < 10) throw std::invalid_argument("estimate_moments: each n must be >= 10");

    std::vector<MomentRecord> records;
    const int n_threads = std::max(1, threads);
    for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
        const std::size_t n = n_grid[gi];
        const std::uint64_t grid_seed = derive_seed(seed, gi);

        std::vector<ReplicateStats> results(reps);
        auto worker = [&](int w) {
            for (std::size_t i = static_cast<std::size_t>(w); i < reps;
                 i += static_cast<std::size_t>(n_threads))
                moment_replicate(n, derive_seed(grid_seed, i), fit_opts,
                                 results[i]);
        };
        if (n_threads == 1) {
            worker(0);
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < n_threads; ++w) pool.emplace_back(worker, w);
            for (auto& t : pool) t.join();
        }

        double sum[4] = {0, 0, 0, 0};
        std::size_t failures = 0, completed = 0;
        for (const ReplicateStats& r : results) {
            if (!r.ok) {
                ++failures;
                continue;
            }
            ++completed;
            for (int t = 0; t < 4; ++t) sum[t] += r.stat[t];
        }

        if (failures * 1000 > reps)  // > 0.1%
            throw std::runtime_error("estimate_moments: fit failure rate exceeds 0.1%");

        for (int t = 0; t < 4; ++t) {
            MomentRecord rec;
            rec.n = n;
            rec.stat = static_cast<TestId>(t);
            rec.mean_stat = sum[t] / static_cast<double>(completed);
            rec.reps = reps;
            rec.seed = seed;
            rec.failures = failures;
            records.push_back(rec);
        }
    }
    return records;
}

CalibrationTargets moments_to_targets(const std::vector<MomentRecord>& records,
                                      double mean_R, double mean_Rstar) {
    if (records.empty())
        throw std::invalid_argument("moments_to_targets: no records");
    CalibrationTargets tg;
    tg.mean_R = mean_R;
    tg.mean_Rstar = mean_Rstar;
    for (const auto& rec : records) {
        auto it = std::find(tg.n.begin(), tg.n.end(), rec.n);
        std::size_t idx;
        if (it == tg.n.end()) {
            tg.n.push_back(rec.n);
            tg.p_n.push_back(0.0);
            tg.r_n.push_back(0.0);
            tg.p_star_n.push_back(0.0);
            tg.r_star_n.push_back(0.0);
            idx = tg.n.size() - 1;
        } else {
            idx = static_cast<std::size_t>(it - tg.n.begin());
        }
        switch (rec.stat) {
            case TestId::Rn1: {
                // mean of (1-p) chi2_0 + p chi2_1 is p, so the target is the moment
                double p = rec.mean_stat;
                if (p > 1.0) { p = 1.0; ++tg.clip_events; }
                if (p < 0.5) { p = 0.5; ++tg.clip_events; }
                tg.p_n[idx] = p;
                break;
            }
            case TestId::Rn2:
                tg.r_n[idx] = rec.mean_stat / mean_R;
                break;
            case TestId::Rn1Star: {
                double p = rec.mean_stat;
                if (p > 1.0) { p = 1.0; ++tg.clip_events; }
                if (p < 0.5) { p = 0.5; ++tg.clip_events; }
                tg.p_star_n[idx] = p;
                break;
            }
            case TestId::Rn2Star:
                tg.r_star_n[idx] = rec.mean_stat / mean_Rstar;
                break;
        }
    }
    return tg;
}

double reference_mean_R(std::size_t draws, std::uint64_t seed) {
    if (draws < 100000)
        throw std::invalid_argument("reference_mean_R: need >= 1e5 draws");
    double sum = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
        Rng rng(derive_seed(seed, i));
        sum += sample_R({rng.next_normal(), rng.next_normal(), rng.next_normal()});
    }
    return sum / static_cast<double>(draws);
}

double reference_mean_Rstar(std::size_t draws, std::uint64_t seed) {
    if (draws < 100000)
        throw std::invalid_argument("reference_mean_Rstar: need >= 1e5 draws");
    double sum = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
        Rng rng(derive_seed(seed, i));
        const double w1 = rng.next_normal();
        const double w2 = rng.next_normal();
        const double w3 = rng.next_normal();
        const double w2p = w2 > 0.0 ? w2 : 0.0;
        const double w3p = w3 > 0.0 ? w3 : 0.0;
        sum += w1 * w1 + std::max(w2p * w2p, w3p * w3p);
    }
    return sum / static_cast<double>(draws);
}

PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& points,
                          double intercept_c) {
    if (points.size() < 3)
        throw std::invalid_argument("fit_power_law: need >= 3 points");
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j)
            if (points[i].first == points[j].first)
                throw std::invalid_argument("fit_power_law: n values must be distinct");

    double spread = 0.0;
    for (const auto& [n, y] : points) spread = std::max(spread, std::fabs(y - intercept_c));
    if (spread == 0.0)
        throw std::runtime_error("fit_power_law: responses carry no signal above the intercept");

    // for fixed b the optimal a is linear least squares on x = n^-b
    auto profile = [&](double b, double& a_out) {
        double sxx = 0.0, sxy = 0.0;
        for (const auto& [n, y] : points) {
            const double x = std::pow(n, -b);
            sxx += x * x;
            sxy += x * (y - intercept_c);
        }
        const double a = sxy / sxx;
        double rss = 0.0;
        for (const auto& [n, y] : points) {
            const double r = y - intercept_c - a * std::pow(n, -b);
            rss += r * r;
        }
        a_out = a;
        return rss;
    };

    // golden-section search for b over [0.05, 3]
    constexpr double invphi = 0.6180339887498948482;
    double lo = 0.05, hi = 3.0;
    double x1 = hi - invphi * (hi - lo);
    double x2 = lo + invphi * (hi - lo);
    double a_tmp;
    double f1 = profile(x1, a_tmp), f2 = profile(x2, a_tmp);
    while (hi - lo > 1e-8) {
        if (f1 > f2) {
            lo = x1; x1 = x2; f1 = f2;
            x2 = lo + invphi * (hi - lo);
            f2 = profile(x2, a_tmp);
        } else {
            hi = x2; x2 = x1; f2 = f1;
            x1 = hi - invphi * (hi - lo);
            f1 = profile(x1, a_tmp);
        }
    }
    PowerLawFit fit;
    fit.intercept = intercept_c;
    fit.b = 0.5 * (lo + hi);
    fit.rss = profile(fit.b, fit.a);
    if (fit.b <= 0.05 + 1e-6 || fit.b >= 3.0 - 1e-6)
        throw std::runtime_error("fit_power_law: exponent hit the search bracket");
    return fit;
}

}  // namespace uplrt
