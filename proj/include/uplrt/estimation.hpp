#pragma once

#include <cstdint>
#include <string>

#include "uplrt/model.hpp"

namespace uplrt {

// The six constraint regimes behind the four LRT statistics. Within each rho
// regime: NULL (exchangeable) < EQVAR (common scale) < FREE.
enum class Constraint {
    NullRho0,      // (mu1, sigma1) = (mu2, sigma2), rho = 0
    EqvarRho0,     // sigma1 = sigma2, rho = 0
    FreeRho0,      // rho = 0
    NullRhoFree,   // (mu1, sigma1) = (mu2, sigma2)
    EqvarRhoFree,  // sigma1 = sigma2
    Free
};

const char* constraint_name(Constraint c);

// true iff every Theta admissible under `inner` is admissible under `outer`
bool nests_within(Constraint inner, Constraint outer);

int free_parameter_count(Constraint c);

struct FitOptions {
    double tolerance = 1e-10;   // convergence tolerance on loglik
    double param_tol = 1e-8;
    int max_iterations = 5000;
    int random_starts = 8;
    std::uint64_t seed = 987654321;
};

struct FitResult {
    Theta theta;
    double loglik;
    Constraint constraint;
    int n_starts = 0;
    bool converged = false;
    int best_start_index = 0;
};

struct fit_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Exact MLE under the exchangeability constraint, with (rho_free = true) or
// without (rho_free = false) a free correlation parameter.
Theta closed_form_null(const UnorderedDataset& ds, bool rho_free);

FitResult fit(const UnorderedDataset& ds, Constraint c, const FitOptions& opts = {});

}  // namespace uplrt
