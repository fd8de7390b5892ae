#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "uplrt/io.hpp"

namespace {

using namespace uplrt;

struct GlobalOpts {
    std::uint64_t seed = 20240101;
    int threads = 1;
    std::string out_path;
    std::string coeffs_path;
    double tolerance = 1e-10;
};

CoefficientSet load_coeffs(const GlobalOpts& g) {
    if (!g.coeffs_path.empty()) return read_coefficients(g.coeffs_path);
    return CoefficientSet::paper_defaults();
}

RLaw default_rlaw() {
    return RLaw::load_or_generate(kDefaultRTableSize, kDefaultRTableSeed,
                                  rlaw_cache_dir());
}

void write_or_print(const GlobalOpts& g, const std::string& content) {
    if (g.out_path.empty()) return;
    std::ofstream out(g.out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + g.out_path);
    out << content;
}

std::string format_p(double p, std::size_t table_size) {
    const double floor = 1.0 / static_cast<double>(table_size + 1);
    char buf[64];
    if (p <= floor) {
        std::snprintf(buf, sizeof(buf), "< %.3g", floor);
    } else {
        std::snprintf(buf, sizeof(buf), "%.4g", p);
    }
    return buf;
}

int cmd_test(const GlobalOpts& g, const std::string& input) {
    std::ifstream in(input, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot open " << input << "\n";
        return 1;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string content = buf.str();

    const UnorderedDataset ds = parse_pairs_csv(content, input);
    if (ds.n() < 7) {
        std::cerr << "error: need at least 7 pairs to fit all six models, got "
                  << ds.n() << "\n";
        return 1;
    }

    FitOptions opts;
    opts.seed = g.seed;
    opts.tolerance = g.tolerance;
    const CoefficientSet cs = load_coeffs(g);
    const RLaw law = default_rlaw();

    const TestReport rep = run_all(ds, opts, cs, law);

    std::printf("n = %zu\n", rep.n);
    std::printf("%-8s %12s %14s %14s\n", "test", "statistic", "p (raw)",
                "p (adjusted)");
    const TestId ids[4] = {TestId::Rn1, TestId::Rn2, TestId::Rn1Star,
                           TestId::Rn2Star};
    bool any_error = false;
    for (TestId id : ids) {
        const int k = static_cast<int>(id);
        if (!rep.ok(id)) {
            std::printf("%-8s    error: %s\n", test_name(id),
                        rep.errors[k].c_str());
            any_error = true;
            continue;
        }
        const bool mc = (id == TestId::Rn2);
        std::printf("%-8s %12.4f %14s %14s\n", test_name(id), rep.statistic(id),
                    mc ? format_p(rep.p_raw[k], law.size).c_str()
                       : format_p(rep.p_raw[k], SIZE_MAX).c_str(),
                    mc ? format_p(rep.p_adj[k], law.size).c_str()
                       : format_p(rep.p_adj[k], SIZE_MAX).c_str());
    }
    write_or_print(g, report_to_json(rep, fnv1a_hash(content), g.seed));
    return any_error ? 1 : 0;
}

int cmd_dist(const GlobalOpts& g, const std::string& what, const std::string& law_id,
             double value, std::int64_t n_opt) {
    const bool adjusted = law_id.size() > 9
        && law_id.substr(law_id.size() - 9) == "-adjusted";
    const std::string base = adjusted ? law_id.substr(0, law_id.size() - 9) : law_id;
    if (base != "chibar" && base != "R" && base != "Rstar")
        throw CLI::ValidationError("law must be chibar|R|Rstar, optionally -adjusted");
    if (adjusted && n_opt < 3)
        throw CLI::ValidationError("adjusted laws require --n >= 3");

    const CoefficientSet cs = load_coeffs(g);
    double result;
    if (what == "pvalue") {
        if (value < 0.0) throw CLI::ValidationError("statistic must be >= 0");
        if (base == "chibar") {
            const TestId id = TestId::Rn1;  // same chibar family as Rn1*
            if (adjusted) {
                const RLaw law;  // not needed for chibar
                (void)law;
                const double w =
                    cs[id].weight_at(static_cast<std::size_t>(n_opt));
                result = chibar_tail(value, w);
            } else {
                result = chibar_tail(value, 0.5);
            }
        } else if (base == "R") {
            const RLaw law = default_rlaw();
            const double t = adjusted
                ? value / cs[TestId::Rn2].scale_at(static_cast<std::size_t>(n_opt))
                : value;
            result = r_tail(t, law);
        } else {
            const double t = adjusted
                ? value / cs[TestId::Rn2Star].scale_at(static_cast<std::size_t>(n_opt))
                : value;
            result = rstar_tail(t);
        }
    } else {  // quantile
        if (!(value > 0.0 && value < 1.0))
            throw CLI::ValidationError("alpha must be in (0,1)");
        if (base == "chibar") {
            const double w = adjusted
                ? cs[TestId::Rn1].weight_at(static_cast<std::size_t>(n_opt))
                : 0.5;
            // invert weight * chisq1_tail(t) = 1 - alpha
            const double tail = 1.0 - value;
            if (tail >= w) {
                result = 0.0;
            } else {
                double lo = 0.0, hi = 1.0;
                while (chibar_tail(hi, w) > tail) hi *= 2.0;
                for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
                    const double mid = 0.5 * (lo + hi);
                    (chibar_tail(mid, w) > tail ? lo : hi) = mid;
                }
                result = 0.5 * (lo + hi);
            }
        } else if (base == "R") {
            const RLaw law = default_rlaw();
            result = r_quantile(value, law);
            if (adjusted)
                result *= cs[TestId::Rn2].scale_at(static_cast<std::size_t>(n_opt));
        } else {
            result = rstar_quantile(value);
            if (adjusted)
                result *= cs[TestId::Rn2Star].scale_at(static_cast<std::size_t>(n_opt));
        }
    }
    std::printf("%.10g\n", result);
    return 0;
}

int cmd_simulate(const GlobalOpts& g, std::size_t n, std::size_t reps,
                 const std::vector<double>& theta_vals,
                 const std::vector<double>& levels, const std::string& mode) {
    ScenarioConfig cfg;
    cfg.n = n;
    cfg.reps = reps;
    cfg.seed = g.seed;
    cfg.threads = g.threads;
    cfg.fit_options.tolerance = g.tolerance;
    if (!levels.empty()) cfg.levels = levels;
    if (!theta_vals.empty()) {
        if (theta_vals.size() != 5)
            throw CLI::ValidationError("--theta needs 5 values: mu1 mu2 sigma1 sigma2 rho");
        cfg.theta = Theta(theta_vals[0], theta_vals[1], theta_vals[2],
                          theta_vals[3], theta_vals[4]);
    }
    if (mode == "raw") cfg.mode = CalibrationMode::Raw;
    else if (mode == "adjusted") cfg.mode = CalibrationMode::Adjusted;
    else cfg.mode = CalibrationMode::Both;

    const CoefficientSet cs = load_coeffs(g);
    const RLaw law = default_rlaw();
    const RejectionTable table = rejection_study(cfg, law, cs);
    const std::string csv = rejection_table_to_csv(table);
    std::cout << csv;
    write_or_print(g, csv);
    return 0;
}

int cmd_calibrate(const GlobalOpts& g, const std::vector<std::size_t>& grid,
                  std::size_t reps) {
    if (grid.size() < 3)
        throw CLI::ValidationError("calibration grid needs >= 3 values of n");
    if (reps < 1000)
        throw CLI::ValidationError("calibration needs reps >= 1000");

    FitOptions opts;
    opts.tolerance = g.tolerance;
    std::fprintf(stderr, "simulating moments on %zu grid points, %zu reps each...\n",
                 grid.size(), reps);
    const auto records = estimate_moments(grid, reps, g.seed, opts, g.threads);
    const double mean_R = reference_mean_R(500000, derive_seed(g.seed, 77));
    const double mean_Rstar = reference_mean_Rstar(500000, derive_seed(g.seed, 78));
    const CalibrationTargets tg = moments_to_targets(records, mean_R, mean_Rstar);

    auto to_points = [&](const std::vector<double>& ys) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < tg.n.size(); ++i)
            pts.emplace_back(static_cast<double>(tg.n[i]), ys[i]);
        return pts;
    };
    CoefficientSet cs;
    const PowerLawFit f1 = fit_power_law(to_points(tg.p_n), 0.5);
    const PowerLawFit f2 = fit_power_law(to_points(tg.r_n), 1.0);
    const PowerLawFit f3 = fit_power_law(to_points(tg.p_star_n), 0.5);
    const PowerLawFit f4 = fit_power_law(to_points(tg.r_star_n), 1.0);
    cs[TestId::Rn1] = {f1.a, f1.b, AdjKind::Weight};
    cs[TestId::Rn2] = {f2.a, f2.b, AdjKind::Scale};
    cs[TestId::Rn1Star] = {f3.a, f3.b, AdjKind::Weight};
    cs[TestId::Rn2Star] = {f4.a, f4.b, AdjKind::Scale};

    std::string note = "calibrated from simulated first moments";
    if (reps < 20000) note += " (low-precision: reps < 20000)";
    const std::string doc = coefficients_to_json(cs, note, grid, reps, g.seed);
    std::cout << doc << "\n";
    write_or_print(g, doc);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Likelihood-ratio homogeneity tests for unordered paired data"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "base RNG seed");
    app.add_option("--threads", g.threads, "worker threads");
    app.add_option("--out", g.out_path, "write structured report to this path");
    app.add_option("--coeffs", g.coeffs_path, "adjustment coefficients JSON file");
    app.add_option("--tolerance", g.tolerance, "optimizer loglik tolerance");

    auto* t = app.add_subcommand("test", "run the four homogeneity tests on a CSV file");
    std::string input;
    t->add_option("input", input, "CSV with two numeric columns")->required();

    auto* d = app.add_subcommand("dist", "query the null distributions");
    std::string what, law_id;
    double value = 0.0;
    std::int64_t n_opt = -1;
    d->add_option("what", what, "quantile or pvalue")
        ->required()->check(CLI::IsMember({"quantile", "pvalue"}));
    d->add_option("law", law_id,
                  "chibar | R | Rstar, optionally with -adjusted suffix")->required();
    d->add_option("value", value, "statistic (pvalue) or alpha (quantile)")->required();
    d->add_option("--n", n_opt, "sample size (required for adjusted laws)");

    auto* s = app.add_subcommand("simulate", "type-I error / power rejection study");
    std::size_t sim_n = 75, sim_reps = 10000;
    std::vector<double> theta_vals, levels;
    std::string mode = "both";
    s->add_option("--n", sim_n, "pairs per dataset");
    s->add_option("--reps", sim_reps, "number of replicates")
        ->check(CLI::PositiveNumber);
    s->add_option("--theta", theta_vals, "mu1 mu2 sigma1 sigma2 rho")->expected(5);
    s->add_option("--levels", levels, "significance levels");
    s->add_option("--mode", mode, "raw | adjusted | both")
        ->check(CLI::IsMember({"raw", "adjusted", "both"}));

    auto* c = app.add_subcommand("calibrate", "refit the adjustment coefficients");
    std::vector<std::size_t> grid{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    std::size_t cal_reps = 50000;
    c->add_option("--grid", grid, "values of n to simulate");
    c->add_option("--reps", cal_reps, "replicates per grid point");

    CLI11_PARSE(app, argc, argv);

    try {
        if (t->parsed()) return cmd_test(g, input);
        if (d->parsed()) return cmd_dist(g, what, law_id, value, n_opt);
        if (s->parsed()) return cmd_simulate(g, sim_n, sim_reps, theta_vals, levels, mode);
        if (c->parsed()) return cmd_calibrate(g, grid, cal_reps);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
