#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace uplrt {

struct NmOptions {
    double f_tol = 1e-10;
    double x_tol = 1e-8;
    int max_iter = 5000;
    double initial_step = 0.25;
};

struct NmResult {
    std::vector<double> x;
    double f = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Downhill simplex minimizer with the standard reflect/expand/contract/shrink
// moves. Derivative-free on purpose: the likelihoods here have quartic-flat
// directions at the null where gradient-based line searches stall.
template <typename F>
NmResult nelder_mead(F&& f, const std::vector<double>& x0, const NmOptions& opts = {}) {
    const std::size_t d = x0.size();
    const std::size_t m = d + 1;

    std::vector<std::vector<double>> simplex(m, x0);
    for (std::size_t i = 0; i < d; ++i) {
        double step = opts.initial_step * std::max(1.0, std::fabs(x0[i]));
        simplex[i + 1][i] += step;
    }

    std::vector<double> fv(m);
    for (std::size_t i = 0; i < m; ++i) fv[i] = f(simplex[i]);

    std::vector<std::size_t> order(m);
    std::vector<double> centroid(d), xr(d), xe(d), xc(d);

    NmResult res;
    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        for (std::size_t i = 0; i < m; ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = order[0], worst = order[m - 1], second = order[m - 2];

        double x_spread = 0.0;
        for (std::size_t j = 0; j < d; ++j)
            x_spread = std::max(x_spread,
                                std::fabs(simplex[worst][j] - simplex[best][j]));
        if (std::fabs(fv[worst] - fv[best]) <= opts.f_tol && x_spread <= opts.x_tol) {
            res.converged = true;
            break;
        }

        for (std::size_t j = 0; j < d; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i)
                if (i != worst) s += simplex[i][j];
            centroid[j] = s / static_cast<double>(d);
        }

        for (std::size_t j = 0; j < d; ++j)
            xr[j] = centroid[j] + (centroid[j] - simplex[worst][j]);
        const double fr = f(xr);

        if (fr < fv[order[0]]) {
            for (std::size_t j = 0; j < d; ++j)
                xe[j] = centroid[j] + 2.0 * (centroid[j] - simplex[worst][j]);
            const double fe = f(xe);
            if (fe < fr) {
                simplex[worst] = xe;
                fv[worst] = fe;
            } else {
                simplex[worst] = xr;
                fv[worst] = fr;
            }
        } else if (fr < fv[second]) {
            simplex[worst] = xr;
            fv[worst] = fr;
        } else {
            const bool outside = fr < fv[worst];
            if (outside) {
                for (std::size_t j = 0; j < d; ++j)
                    xc[j] = centroid[j] + 0.5 * (xr[j] - centroid[j]);
            } else {
                for (std::size_t j = 0; j < d; ++j)
                    xc[j] = centroid[j] + 0.5 * (simplex[worst][j] - centroid[j]);
            }
            const double fc = f(xc);
            if (fc < std::min(fr, fv[worst])) {
                simplex[worst] = xc;
                fv[worst] = fc;
            } else {
                // shrink toward the best vertex
                for (std::size_t i = 0; i < m; ++i) {
                    if (i == best) continue;
                    for (std::size_t j = 0; j < d; ++j)
                        simplex[i][j] = simplex[best][j]
                                      + 0.5 * (simplex[i][j] - simplex[best][j]);
                    fv[i] = f(simplex[i]);
                }
            }
        }
    }

    std::size_t ibest = 0;
    for (std::size_t i = 1; i < m; ++i)
        if (fv[i] < fv[ibest]) ibest = i;
    res.x = simplex[ibest];
    res.f = fv[ibest];
    res.iterations = iter;
    return res;
}

}  // namespace uplrt
