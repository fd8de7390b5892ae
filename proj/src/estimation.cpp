#include "uplrt/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "uplrt/nelder_mead.hpp"
#include "uplrt/rng.hpp"

namespace uplrt {

namespace {

constexpr double kAtanhRhoCap = 12.0;
constexpr double kBigPenalty = 1e100;

struct ZStats {
    std::size_t n = 0;
    double mean_z1 = 0.0, var_z1 = 0.0;      // var is the MLE (divide by n)
    double mean_z2 = 0.0, mean_z2sq = 0.0;   // z2 = (y_hi - y_lo)/2 >= 0
    double cov_z1z2 = 0.0;
    double mean_lo = 0.0, mean_hi = 0.0, var_lo = 0.0, var_hi = 0.0;
};

ZStats z_stats(const UnorderedDataset& ds) {
    ZStats s;
    s.n = ds.n();
    const double inv_n = 1.0 / static_cast<double>(s.n);
    for (const auto& p : ds.pairs) {
        s.mean_z1 += 0.5 * (p.y_lo + p.y_hi);
        s.mean_z2 += 0.5 * (p.y_hi - p.y_lo);
        s.mean_lo += p.y_lo;
        s.mean_hi += p.y_hi;
    }
    s.mean_z1 *= inv_n;
    s.mean_z2 *= inv_n;
    s.mean_lo *= inv_n;
    s.mean_hi *= inv_n;
    for (const auto& p : ds.pairs) {
        const double z1 = 0.5 * (p.y_lo + p.y_hi);
        const double z2 = 0.5 * (p.y_hi - p.y_lo);
        s.var_z1 += (z1 - s.mean_z1) * (z1 - s.mean_z1);
        s.mean_z2sq += z2 * z2;
        s.cov_z1z2 += (z1 - s.mean_z1) * (z2 - s.mean_z2);
        s.var_lo += (p.y_lo - s.mean_lo) * (p.y_lo - s.mean_lo);
        s.var_hi += (p.y_hi - s.mean_hi) * (p.y_hi - s.mean_hi);
    }
    s.var_z1 *= inv_n;
    s.mean_z2sq *= inv_n;
    s.cov_z1z2 *= inv_n;
    s.var_lo *= inv_n;
    s.var_hi *= inv_n;
    return s;
}

void check_not_degenerate(const ZStats& s) {
    if (s.mean_z2sq <= 0.0)
        throw degenerate_data_error("all pairs are ties (Z2 identically zero)");
    if (s.var_z1 <= 0.0)
        throw degenerate_data_error("all pair midpoints are identical");
}

bool constrained_rho0(Constraint c) {
    return c == Constraint::NullRho0 || c == Constraint::EqvarRho0
        || c == Constraint::FreeRho0;
}

Theta canonicalize(Theta t) {
    if (t.mu1 > t.mu2 || (t.mu1 == t.mu2 && t.sigma1 > t.sigma2)) {
        std::swap(t.mu1, t.mu2);
        std::swap(t.sigma1, t.sigma2);
    }
    return t;
}

// Runs Nelder-Mead from each start, keeps the best (ties by start index),
// then restarts once from the winner with a small simplex as a polish.
template <typename F>
NmResult best_of_starts(F&& f, const std::vector<std::vector<double>>& starts,
                        const FitOptions& opts, int& best_index) {
    NmOptions nm;
    nm.f_tol = opts.tolerance;
    nm.x_tol = opts.param_tol;
    nm.max_iter = opts.max_iterations;

    NmResult best;
    best.f = std::numeric_limits<double>::infinity();
    best_index = 0;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        NmResult r = nelder_mead(f, starts[i], nm);
        if (r.f < best.f) {
            best = std::move(r);
            best_index = static_cast<int>(i);
        }
    }
    NmOptions polish = nm;
    polish.initial_step = 0.02;
    NmResult p = nelder_mead(f, best.x, polish);
    if (p.f < best.f) {
        p.converged = p.converged || best.converged;
        best = std::move(p);
    }
    return best;
}

void add_random_perturbations(std::vector<std::vector<double>>& starts,
                              std::vector<double> center,  // by value: growing
                              const FitOptions& opts) {    // starts invalidates refs
    for (int k = 0; k < opts.random_starts; ++k) {
        Rng rng(derive_seed(opts.seed, static_cast<std::uint64_t>(k)));
        std::vector<double> x = center;
        for (auto& xj : x)
            xj += 0.25 * std::max(1.0, std::fabs(xj)) * rng.next_normal();
        starts.push_back(std::move(x));
    }
}

double safe_log_sd(double var, double fallback_var) {
    const double v = var > 0.0 ? var : fallback_var;
    return 0.5 * std::log(v);
}

}  // namespace

const char* constraint_name(Constraint c) {
    switch (c) {
        case Constraint::NullRho0: return "null_rho0";
        case Constraint::EqvarRho0: return "eqvar_rho0";
        case Constraint::FreeRho0: return "free_rho0";
        case Constraint::NullRhoFree: return "null_rhofree";
        case Constraint::EqvarRhoFree: return "eqvar_rhofree";
        case Constraint::Free: return "free";
    }
    return "?";
}

int free_parameter_count(Constraint c) {
    switch (c) {
        case Constraint::NullRho0: return 2;
        case Constraint::EqvarRho0: return 3;
        case Constraint::FreeRho0: return 4;
        case Constraint::NullRhoFree: return 3;
        case Constraint::EqvarRhoFree: return 4;
        case Constraint::Free: return 5;
    }
    return 0;
}

bool nests_within(Constraint inner, Constraint outer) {
    if (inner == outer) return true;
    auto rank = [](Constraint c) {  // NULL=0, EQVAR=1, FREE=2
        switch (c) {
            case Constraint::NullRho0: case Constraint::NullRhoFree: return 0;
            case Constraint::EqvarRho0: case Constraint::EqvarRhoFree: return 1;
            default: return 2;
        }
    };
    const bool inner_rho0 = constrained_rho0(inner);
    const bool outer_rho0 = constrained_rho0(outer);
    if (!inner_rho0 && outer_rho0) return false;  // rho-free does not nest in rho=0
    return rank(inner) <= rank(outer);
}

Theta closed_form_null(const UnorderedDataset& ds, bool rho_free) {
    if (ds.n() < 2) throw fit_error("closed_form_null: need n >= 2");
    const ZStats s = z_stats(ds);
    if (!rho_free) {
        // pooled mean and variance over all 2n values
        double mu = 0.0;
        for (const auto& p : ds.pairs) mu += p.y_lo + p.y_hi;
        mu /= static_cast<double>(2 * ds.n());
        double ss = 0.0;
        for (const auto& p : ds.pairs) {
            ss += (p.y_lo - mu) * (p.y_lo - mu);
            ss += (p.y_hi - mu) * (p.y_hi - mu);
        }
        const double var = ss / static_cast<double>(2 * ds.n());
        if (!(var > 0.0)) throw degenerate_data_error("closed_form_null: zero variance");
        const double sd = std::sqrt(var);
        return Theta(mu, mu, sd, sd, 0.0);
    }
    if (!(s.var_z1 > 0.0) || !(s.mean_z2sq > 0.0))
        throw degenerate_data_error("closed_form_null: degenerate Z components");
    const double sp2 = s.var_z1;
    const double sm2 = s.mean_z2sq;
    const double var = sp2 + sm2;
    const double rho = (sp2 - sm2) / (sp2 + sm2);
    const double sd = std::sqrt(var);
    return Theta(s.mean_z1, s.mean_z1, sd, sd, rho);
}

namespace {

// Fits in original coordinates (means and log-scales) with rho fixed at 0.
FitResult fit_rho0_numeric(const UnorderedDataset& ds, Constraint c,
                           const FitOptions& opts, const ZStats& s) {
    const bool eqvar = (c == Constraint::EqvarRho0);
    const Theta null_theta = closed_form_null(ds, false);
    const double fallback_var = null_theta.sigma1 * null_theta.sigma1;

    auto unpack = [eqvar](const std::vector<double>& x) {
        const double s1 = std::exp(x[2]);
        const double s2 = eqvar ? s1 : std::exp(x[3]);
        return Theta(x[0], x[1], s1, s2, 0.0);
    };
    auto objective = [&](const std::vector<double>& x) {
        for (double xj : x)
            if (!(std::fabs(xj) < 1e8)) return kBigPenalty;
        if (std::fabs(x[2]) > 50.0 || (!eqvar && std::fabs(x[3]) > 50.0))
            return kBigPenalty;
        return -log_likelihood(ds, unpack(x));
    };

    std::vector<std::vector<double>> starts;
    const double log_s0 = std::log(null_theta.sigma1);
    if (eqvar) {
        starts.push_back({null_theta.mu1, null_theta.mu2, log_s0});
        const double log_s_pool =
            safe_log_sd(0.5 * (s.var_lo + s.var_hi), fallback_var);
        starts.push_back({s.mean_lo, s.mean_hi, log_s_pool});
        starts.push_back({s.mean_hi, s.mean_lo, log_s_pool});
    } else {
        starts.push_back({null_theta.mu1, null_theta.mu2, log_s0, log_s0});
        const double lsl = safe_log_sd(s.var_lo, fallback_var);
        const double lsh = safe_log_sd(s.var_hi, fallback_var);
        starts.push_back({s.mean_lo, s.mean_hi, lsl, lsh});
        starts.push_back({s.mean_hi, s.mean_lo, lsh, lsl});
    }
    add_random_perturbations(starts, starts[0], opts);

    int best_index = 0;
    NmResult r = best_of_starts(objective, starts, opts, best_index);

    Theta theta = unpack(r.x);
    // both non-null rho-0 fits are label-ambiguous: Free by construction,
    // Eqvar because sigma1 = sigma2 makes the swap a likelihood symmetry
    if (c != Constraint::NullRho0) theta = canonicalize(theta);
    FitResult out{theta, log_likelihood(ds, theta), c,
                  static_cast<int>(starts.size()), r.converged, best_index};
    return out;
}

// Rho-free fits via the likelihood decomposition: the Z1 block is maximized
// exactly, the Z2 mixture block numerically.
FitResult fit_rhofree_numeric(const UnorderedDataset& ds, Constraint c,
                              const FitOptions& opts, const ZStats& s) {
    const bool eqvar = (c == Constraint::EqvarRhoFree);
    const double mu_hat = s.mean_z1;
    const double sp_hat = std::sqrt(s.var_z1);
    const double z1_block = loglik_z1_block(ds, mu_hat, sp_hat);

    // coordinates: (beta0, log eta) or (beta0, beta1, log eta)
    auto unpack_b = [eqvar](const std::vector<double>& x, double& b0, double& b1,
                            double& eta) {
        b0 = x[0];
        b1 = eqvar ? 0.0 : x[1];
        eta = std::exp(eqvar ? x[1] : x[2]);
    };
    auto objective = [&](const std::vector<double>& x) {
        for (double xj : x)
            if (!(std::fabs(xj) < 1e8)) return kBigPenalty;
        if (std::fabs(x.back()) > 50.0) return kBigPenalty;
        double b0, b1, eta;
        unpack_b(x, b0, b1, eta);
        return -loglik_z2_block(ds, b0, b1, eta);
    };

    std::vector<std::vector<double>> starts;
    const double log_eta0 = 0.5 * std::log(s.mean_z2sq);
    if (eqvar) {
        starts.push_back({0.0, log_eta0});
        // orientation starts: signed Z2 = +/- (y_hi - y_lo)/2
        for (double sign : {+1.0, -1.0}) {
            const double b0 = sign * s.mean_z2;
            const double resid = s.mean_z2sq - s.mean_z2 * s.mean_z2;
            starts.push_back({b0, safe_log_sd(resid, s.mean_z2sq)});
        }
    } else {
        starts.push_back({0.0, 0.0, log_eta0});
        for (double sign : {+1.0, -1.0}) {
            const double b1 = sign * s.cov_z1z2 / s.var_z1;
            const double b0 = sign * s.mean_z2 - b1 * s.mean_z1;
            double resid = s.mean_z2sq - s.mean_z2 * s.mean_z2
                         - b1 * b1 * s.var_z1;
            starts.push_back({b0, b1, safe_log_sd(resid, s.mean_z2sq)});
        }
    }
    add_random_perturbations(starts, starts[0], opts);

    int best_index = 0;
    NmResult r = best_of_starts(objective, starts, opts, best_index);

    double b0, b1, eta;
    unpack_b(r.x, b0, b1, eta);
    Theta theta = from_reparam(ReparamTheta(mu_hat, sp_hat, b0, b1, eta));
    if (c != Constraint::NullRhoFree) theta = canonicalize(theta);

    FitResult out{theta, log_likelihood(ds, theta), c,
                  static_cast<int>(starts.size()), r.converged, best_index};
    (void)z1_block;
    return out;
}

}  // namespace

FitResult fit(const UnorderedDataset& ds, Constraint c, const FitOptions& opts) {
    if (ds.n() < static_cast<std::size_t>(free_parameter_count(c) + 2))
        throw fit_error("fit: need n >= number of free parameters + 2");
    const ZStats s = z_stats(ds);
    check_not_degenerate(s);

    FitResult result = [&] {
        switch (c) {
            case Constraint::NullRho0:
            case Constraint::NullRhoFree: {
                Theta t = closed_form_null(ds, c == Constraint::NullRhoFree);
                return FitResult{t, log_likelihood(ds, t), c, 1, true, 0};
            }
            case Constraint::EqvarRho0:
            case Constraint::FreeRho0:
                return fit_rho0_numeric(ds, c, opts, s);
            case Constraint::EqvarRhoFree:
            case Constraint::Free:
                return fit_rhofree_numeric(ds, c, opts, s);
        }
        throw fit_error("fit: unknown constraint");
    }();

    // near-singular correlation: cap and flag
    const double rho_cap = std::tanh(kAtanhRhoCap);
    if (std::fabs(result.theta.rho) > rho_cap) {
        result.theta.rho = result.theta.rho > 0 ? rho_cap : -rho_cap;
        result.loglik = log_likelihood(ds, result.theta);
        result.converged = false;
    }
    return result;
}

}  // namespace uplrt
