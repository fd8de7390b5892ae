#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "uplrt/estimation.hpp"
#include "uplrt/nelder_mead.hpp"
#include "uplrt/sim.hpp"

using namespace uplrt;

namespace {

UnorderedDataset make_dataset(std::initializer_list<std::pair<double, double>> rows) {
    UnorderedDataset ds;
    for (const auto& [a, b] : rows) ds.pairs.emplace_back(a, b);
    return ds;
}

UnorderedDataset random_dataset(std::size_t n, Rng& rng) {
    std::vector<UnorderedPair> pairs;
    pairs.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        pairs.emplace_back(2.0 * rng.next_normal(), 1.0 + 1.5 * rng.next_normal());
    return UnorderedDataset(std::move(pairs));
}

// Independent numerical route to the exchangeable MLE: Nelder-Mead on the
// unconstrained chart (mu, log sigma[, atanh rho]) applied directly to the
// dataset log-likelihood of Eq. (3)-style mixture densities.
Theta nm_null_fit(const UnorderedDataset& ds, bool rho_free) {
    NmOptions nm;
    nm.f_tol = 1e-13;
    nm.x_tol = 1e-10;
    nm.max_iter = 20000;
    if (rho_free) {
        auto obj = [&ds](const std::vector<double>& x) {
            const double s = std::exp(x[1]);
            return -log_likelihood(ds, Theta(x[0], x[0], s, s, std::tanh(x[2])));
        };
        const auto res = nelder_mead(obj, {0.0, 0.0, 0.0}, nm);
        const double s = std::exp(res.x[1]);
        return Theta(res.x[0], res.x[0], s, s, std::tanh(res.x[2]));
    }
    auto obj = [&ds](const std::vector<double>& x) {
        const double s = std::exp(x[1]);
        return -log_likelihood(ds, Theta(x[0], x[0], s, s, 0.0));
    };
    const auto res = nelder_mead(obj, {0.0, 0.0}, nm);
    const double s = std::exp(res.x[1]);
    return Theta(res.x[0], res.x[0], s, s, 0.0);
}

}  // namespace

TEST_CASE("constraint metadata") {
    CHECK(free_parameter_count(Constraint::NullRho0) == 2);
    CHECK(free_parameter_count(Constraint::EqvarRho0) == 3);
    CHECK(free_parameter_count(Constraint::FreeRho0) == 4);
    CHECK(free_parameter_count(Constraint::NullRhoFree) == 3);
    CHECK(free_parameter_count(Constraint::EqvarRhoFree) == 4);
    CHECK(free_parameter_count(Constraint::Free) == 5);

    CHECK(nests_within(Constraint::NullRho0, Constraint::EqvarRho0));
    CHECK(nests_within(Constraint::NullRho0, Constraint::FreeRho0));
    CHECK(nests_within(Constraint::EqvarRho0, Constraint::FreeRho0));
    CHECK(nests_within(Constraint::NullRhoFree, Constraint::EqvarRhoFree));
    CHECK(nests_within(Constraint::EqvarRhoFree, Constraint::Free));
    CHECK(nests_within(Constraint::NullRho0, Constraint::Free));
    CHECK_FALSE(nests_within(Constraint::FreeRho0, Constraint::EqvarRhoFree));
    CHECK_FALSE(nests_within(Constraint::Free, Constraint::NullRho0));
}

TEST_CASE("closed form null without correlation pools all values") {
    // pooled sample: {0, 2, 2, 4}; mean 2, variance 2 (MLE convention)
    const UnorderedDataset ds = make_dataset({{0.0, 2.0}, {2.0, 4.0}});
    const Theta t = closed_form_null(ds, false);
    CHECK(t.mu1 == doctest::Approx(2.0));
    CHECK(t.mu2 == doctest::Approx(2.0));
    CHECK(t.sigma1 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(t.sigma2 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(t.rho == 0.0);
}

TEST_CASE("closed form null with free correlation, worked example") {
    // pairs {(0,2),(1,3)}: Z1 = {1,2}, Z2 = {1,1}
    // mu = 1.5, var(Z1) = 0.25, mean(Z2^2) = 1
    // sigma^2 = 0.25 + 1 = 1.25, rho = (0.25-1)/(0.25+1) = -0.6
    const UnorderedDataset ds = make_dataset({{0.0, 2.0}, {1.0, 3.0}});
    const Theta t = closed_form_null(ds, true);
    CHECK(t.mu1 == doctest::Approx(1.5));
    CHECK(t.mu2 == doctest::Approx(1.5));
    CHECK(t.sigma1 == doctest::Approx(std::sqrt(1.25)).epsilon(1e-12));
    CHECK(t.sigma2 == doctest::Approx(std::sqrt(1.25)).epsilon(1e-12));
    CHECK(t.rho == doctest::Approx(-0.6).epsilon(1e-12));
}

TEST_CASE("closed form null maximizes the likelihood: independent optimizer route") {
    Rng rng(2024);
    for (int rep = 0; rep < 8; ++rep) {
        UnorderedDataset ds = random_dataset(20 + (rng.next_u64() % 20), rng);
        for (bool rho_free : {false, true}) {
            const Theta closed = closed_form_null(ds, rho_free);
            const Theta numeric = nm_null_fit(ds, rho_free);
            const double lc = log_likelihood(ds, closed);
            const double ln = log_likelihood(ds, numeric);
            // the closed form can only be at least as good, and must agree
            CHECK(lc >= ln - 1e-7);
            CHECK(std::fabs(lc - ln) <= 1e-6 * std::max(1.0, std::fabs(lc)));
            CHECK(numeric.mu1 == doctest::Approx(closed.mu1).epsilon(5e-5));
            CHECK(numeric.sigma1 == doctest::Approx(closed.sigma1).epsilon(5e-5));
            if (rho_free)
                CHECK(numeric.rho == doctest::Approx(closed.rho).epsilon(2e-4));
        }
    }
}

TEST_CASE("fit honors each constraint exactly") {
    Rng rng(55);
    UnorderedDataset ds = random_dataset(25, rng);
    FitOptions opts;
    opts.random_starts = 4;

    const FitResult n0 = fit(ds, Constraint::NullRho0, opts);
    CHECK(n0.theta.mu1 == n0.theta.mu2);
    CHECK(n0.theta.sigma1 == n0.theta.sigma2);
    CHECK(n0.theta.rho == 0.0);

    const FitResult e0 = fit(ds, Constraint::EqvarRho0, opts);
    CHECK(e0.theta.sigma1 == e0.theta.sigma2);
    CHECK(e0.theta.rho == 0.0);

    const FitResult f0 = fit(ds, Constraint::FreeRho0, opts);
    CHECK(f0.theta.rho == 0.0);

    const FitResult nf = fit(ds, Constraint::NullRhoFree, opts);
    CHECK(nf.theta.mu1 == nf.theta.mu2);
    CHECK(nf.theta.sigma1 == nf.theta.sigma2);

    const FitResult ef = fit(ds, Constraint::EqvarRhoFree, opts);
    CHECK(ef.theta.sigma1 == ef.theta.sigma2);

    for (const auto& r : {n0, e0, f0, nf, ef}) {
        CHECK(r.converged);
        CHECK(std::isfinite(r.loglik));
        CHECK(r.loglik == doctest::Approx(log_likelihood(ds, r.theta)).epsilon(1e-12));
    }
}

TEST_CASE("fit of the null constraints agrees with the closed forms") {
    Rng rng(31337);
    for (int rep = 0; rep < 10; ++rep) {
        UnorderedDataset ds = random_dataset(10 + (rng.next_u64() % 40), rng);
        for (bool rho_free : {false, true}) {
            const Constraint c = rho_free ? Constraint::NullRhoFree
                                          : Constraint::NullRho0;
            const Theta closed = closed_form_null(ds, rho_free);
            const FitResult r = fit(ds, c);
            CHECK(r.theta.mu1 == doctest::Approx(closed.mu1).epsilon(1e-6));
            CHECK(r.theta.sigma1 == doctest::Approx(closed.sigma1).epsilon(1e-6));
            CHECK(r.theta.rho == doctest::Approx(closed.rho).epsilon(1e-6));
        }
    }
}

TEST_CASE("fit(FreeRho0) matches a refined grid oracle") {
    Rng rng(60601);
    FitOptions opts;
    for (int rep = 0; rep < 2; ++rep) {
        UnorderedDataset ds = random_dataset(12, rng);
        const FitResult r = fit(ds, Constraint::FreeRho0, opts);
        double m1 = 0.0, m2 = 0.0, v1 = 0.0, v2 = 0.0;
        for (const auto& p : ds.pairs) { m1 += p.y_lo; m2 += p.y_hi; }
        m1 /= static_cast<double>(ds.n());
        m2 /= static_cast<double>(ds.n());
        for (const auto& p : ds.pairs) {
            v1 += (p.y_lo - m1) * (p.y_lo - m1);
            v2 += (p.y_hi - m2) * (p.y_hi - m2);
        }
        const double s1 = std::sqrt(v1 / static_cast<double>(ds.n()));
        const double s2 = std::sqrt(v2 / static_cast<double>(ds.n()));
        auto obj = [&ds](const std::vector<double>& x) {
            return log_likelihood(
                ds, Theta(x[0], x[1], std::exp(x[2]), std::exp(x[3]), 0.0));
        };
        const double grid_best = oracles::grid_maximize(
            obj,
            {m1 - 1.5 * s1, m2 - 1.5 * s2, std::log(0.3 * s1), std::log(0.3 * s2)},
            {m1 + 1.5 * s1, m2 + 1.5 * s2, std::log(3.0 * s1), std::log(3.0 * s2)},
            13, 4);
        CHECK(r.loglik >= grid_best - 1e-6);
        CHECK(r.loglik == doctest::Approx(grid_best).epsilon(1e-3));
    }
}

TEST_CASE("fitted log-likelihoods are monotone along the nesting chain") {
    Rng rng(777);
    FitOptions opts;
    opts.random_starts = 4;
    for (int rep = 0; rep < 15; ++rep) {
        UnorderedDataset ds = random_dataset(8 + (rng.next_u64() % 30), rng);
        const double l_n0 = fit(ds, Constraint::NullRho0, opts).loglik;
        const double l_e0 = fit(ds, Constraint::EqvarRho0, opts).loglik;
        const double l_f0 = fit(ds, Constraint::FreeRho0, opts).loglik;
        const double l_nf = fit(ds, Constraint::NullRhoFree, opts).loglik;
        const double l_ef = fit(ds, Constraint::EqvarRhoFree, opts).loglik;
        const double l_fr = fit(ds, Constraint::Free, opts).loglik;
        const double tol = 1e-6;
        CHECK(l_e0 >= l_n0 - tol);
        CHECK(l_f0 >= l_e0 - tol);
        CHECK(l_nf >= l_n0 - tol);
        CHECK(l_ef >= l_e0 - tol);
        CHECK(l_ef >= l_nf - tol);
        CHECK(l_fr >= l_ef - tol);
        CHECK(l_fr >= l_f0 - tol);
    }
}

TEST_CASE("fit is equivariant under affine maps of the data") {
    Rng rng(909);
    const double a = 1.75, b = 3.0;
    FitOptions opts;
    UnorderedDataset ds = random_dataset(30, rng);
    UnorderedDataset tds;
    for (const auto& p : ds.pairs)
        tds.pairs.emplace_back(a * p.y_lo + b, a * p.y_hi + b);
    for (Constraint c : {Constraint::EqvarRho0, Constraint::FreeRho0,
                         Constraint::EqvarRhoFree, Constraint::Free}) {
        const FitResult r = fit(ds, c, opts);
        const FitResult tr = fit(tds, c, opts);
        CHECK(tr.theta.mu1 == doctest::Approx(a * r.theta.mu1 + b).epsilon(2e-5));
        CHECK(tr.theta.mu2 == doctest::Approx(a * r.theta.mu2 + b).epsilon(2e-5));
        CHECK(tr.theta.sigma1 == doctest::Approx(a * r.theta.sigma1).epsilon(2e-5));
        CHECK(tr.theta.sigma2 == doctest::Approx(a * r.theta.sigma2).epsilon(2e-5));
        CHECK(tr.theta.rho == doctest::Approx(r.theta.rho).epsilon(1e-4));
    }
}

TEST_CASE("consistency smoke: free fit recovers a well-separated truth") {
    const Theta truth(0.0, 1.0, 1.0, 2.0, 0.5);
    Rng rng(123456);
    UnorderedDataset ds = generate_dataset(5000, truth, rng);
    const FitResult r = fit(ds, Constraint::Free);
    CHECK(r.converged);
    // the free MLE is identified up to the label swap; canonical order mu1<=mu2
    CHECK(r.theta.mu1 == doctest::Approx(truth.mu1).epsilon(0.15));
    CHECK(r.theta.mu2 == doctest::Approx(truth.mu2).epsilon(0.15));
    CHECK(r.theta.sigma1 == doctest::Approx(truth.sigma1).epsilon(0.15));
    CHECK(r.theta.sigma2 == doctest::Approx(truth.sigma2).epsilon(0.15));
    CHECK(std::fabs(r.theta.rho - truth.rho) < 0.15);
}

TEST_CASE("fit is deterministic for fixed options") {
    Rng rng(2);
    UnorderedDataset ds = random_dataset(18, rng);
    const FitResult a = fit(ds, Constraint::Free);
    const FitResult b = fit(ds, Constraint::Free);
    CHECK(a.theta.mu1 == b.theta.mu1);
    CHECK(a.theta.sigma2 == b.theta.sigma2);
    CHECK(a.loglik == b.loglik);
}

TEST_CASE("degenerate data is rejected") {
    // every pair tied: Z2 identically zero
    UnorderedDataset tied = make_dataset({{1.0, 1.0}, {2.0, 2.0}, {3.0, 3.0},
                                          {4.0, 4.0}, {5.0, 5.0}, {6.0, 6.0},
                                          {7.0, 7.0}, {8.0, 8.0}});
    CHECK_THROWS_AS(fit(tied, Constraint::Free), degenerate_data_error);
    CHECK_THROWS_AS(closed_form_null(tied, true), degenerate_data_error);

    // a single repeated pair: no spread in Z1
    UnorderedDataset flat;
    for (int i = 0; i < 8; ++i) flat.pairs.emplace_back(0.0, 2.0);
    CHECK_THROWS_AS(fit(flat, Constraint::Free), degenerate_data_error);

    UnorderedDataset empty;
    CHECK_THROWS_AS(fit(empty, Constraint::NullRho0), fit_error);

    // too few pairs for the requested parameter count
    UnorderedDataset tiny = make_dataset({{0.0, 1.0}, {2.0, 5.0}, {1.0, 4.0}});
    CHECK_THROWS_AS(fit(tiny, Constraint::Free), fit_error);
}
