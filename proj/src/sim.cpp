#include "uplrt/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "uplrt/test_statistics.hpp"

namespace uplrt {

UnorderedDataset generate_dataset(std::size_t n, const Theta& theta, Rng& rng) {
    theta.validate();
    std::vector<UnorderedPair> pairs;
    pairs.reserve(n);
    const double c = std::sqrt(1.0 - theta.rho * theta.rho);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.next_normal();
        const double v = rng.next_normal();
        const double x1 = theta.mu1 + theta.sigma1 * u;
        const double x2 = theta.mu2 + theta.sigma2 * (theta.rho * u + c * v);
        pairs.emplace_back(x1, x2);
    }
    return UnorderedDataset(std::move(pairs));
}

namespace {

struct Counts {
    // [test][level] counts for raw and adjusted calibrations
    std::array<std::vector<std::size_t>, 4> raw{};
    std::array<std::vector<std::size_t>, 4> adj{};
    std::size_t failures = 0;
    std::size_t completed = 0;

    explicit Counts(std::size_t n_levels) {
        for (int t = 0; t < 4; ++t) {
            raw[t].assign(n_levels, 0);
            adj[t].assign(n_levels, 0);
        }
    }
    void merge(const Counts& o) {
        for (int t = 0; t < 4; ++t)
            for (std::size_t l = 0; l < raw[t].size(); ++l) {
                raw[t][l] += o.raw[t][l];
                adj[t][l] += o.adj[t][l];
            }
        failures += o.failures;
        completed += o.completed;
    }
};

void run_replicate(std::size_t i, const ScenarioConfig& cfg,
                   const std::vector<double>& levels, const RLaw& law,
                   const CoefficientSet& cs, Counts& counts) {
    Rng rng(derive_seed(cfg.seed, i));
    const UnorderedDataset ds = generate_dataset(cfg.n, cfg.theta, rng);

    const bool need_rho0 = cfg.which_tests[0] || cfg.which_tests[1];
    const bool need_star = cfg.which_tests[2] || cfg.which_tests[3];

    FitOptions opts = cfg.fit_options;
    opts.seed = derive_seed(cfg.seed, i ^ 0x5bf03635ULL);

    std::array<double, 4> stat{-1.0, -1.0, -1.0, -1.0};
    try {
        if (need_rho0) {
            const FitResult null0 = fit(ds, Constraint::NullRho0, opts);
            if (cfg.which_tests[0]) {
                const FitResult eq = fit(ds, Constraint::EqvarRho0, opts);
                stat[0] = std::max(0.0, 2.0 * (eq.loglik - null0.loglik));
            }
            if (cfg.which_tests[1]) {
                const FitResult fr = fit(ds, Constraint::FreeRho0, opts);
                stat[1] = std::max(0.0, 2.0 * (fr.loglik - null0.loglik));
            }
        }
        if (need_star) {
            const FitResult nulls = fit(ds, Constraint::NullRhoFree, opts);
            if (cfg.which_tests[2]) {
                const FitResult eq = fit(ds, Constraint::EqvarRhoFree, opts);
                stat[2] = std::max(0.0, 2.0 * (eq.loglik - nulls.loglik));
            }
            if (cfg.which_tests[3]) {
                const FitResult fr = fit(ds, Constraint::Free, opts);
                stat[3] = std::max(0.0, 2.0 * (fr.loglik - nulls.loglik));
            }
        }
    } catch (const std::exception&) {
        ++counts.failures;
        return;
    }

    for (int t = 0; t < 4; ++t) {
        if (!cfg.which_tests[t]) continue;
        const TestId id = static_cast<TestId>(t);
        const double p_raw = raw_pvalue(id, stat[t], law);
        const double p_adj = adjusted_pvalue(id, stat[t], cfg.n, cs, law).p;
        for (std::size_t l = 0; l < levels.size(); ++l) {
            if (p_raw <= levels[l]) ++counts.raw[t][l];
            if (p_adj <= levels[l]) ++counts.adj[t][l];
        }
    }
    ++counts.completed;
}

}  // namespace

RejectionTable rejection_study(const ScenarioConfig& cfg, const RLaw& law,
                               const CoefficientSet& cs) {
    if (cfg.reps < 1) throw std::invalid_argument("rejection_study: reps must be >= 1");
    std::vector<double> levels = cfg.levels;
    std::sort(levels.begin(), levels.end());
    for (double l : levels)
        if (!(l > 0.0 && l < 1.0))
            throw std::invalid_argument("rejection_study: levels must be in (0,1)");

    const int n_threads = std::max(1, cfg.threads);
    std::vector<Counts> partial(static_cast<std::size_t>(n_threads),
                                Counts(levels.size()));
    auto worker = [&](int w) {
        for (std::size_t i = static_cast<std::size_t>(w); i < cfg.reps;
             i += static_cast<std::size_t>(n_threads))
            run_replicate(i, cfg, levels, law, cs, partial[static_cast<std::size_t>(w)]);
    };
    if (n_threads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_threads; ++w) pool.emplace_back(worker, w);
        for (auto& t : pool) t.join();
    }

    Counts total(levels.size());
    for (const auto& p : partial) total.merge(p);

    if (total.failures * 200 > cfg.reps)  // > 0.5%
        throw std::runtime_error("rejection_study: fit failure rate exceeds 0.5%");

    RejectionTable table;
    table.config = cfg;
    table.levels = levels;
    table.failures = total.failures;
    table.completed = total.completed;
    const double denom = static_cast<double>(total.completed);
    auto fill = [&](const std::array<std::vector<std::size_t>, 4>& src,
                    std::array<std::vector<RejectionCell>, 4>& dst) {
        for (int t = 0; t < 4; ++t) {
            dst[t].resize(levels.size());
            for (std::size_t l = 0; l < levels.size(); ++l) {
                const double p = denom > 0 ? src[t][l] / denom : 0.0;
                dst[t][l].percent = 100.0 * p;
                dst[t][l].std_error = 100.0 * std::sqrt(p * (1.0 - p) / denom);
            }
        }
    };
    fill(total.raw, table.raw);
    fill(total.adj, table.adjusted);
    return table;
}

}  // namespace uplrt
