#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "uplrt/io.hpp"

namespace py = pybind11;
using namespace uplrt;

namespace {

UnorderedDataset make_dataset(const std::vector<std::pair<double, double>>& rows) {
    std::vector<UnorderedPair> pairs;
    pairs.reserve(rows.size());
    for (const auto& [a, b] : rows) pairs.emplace_back(a, b);
    return UnorderedDataset(std::move(pairs));
}

TestId test_id_from_name(const std::string& name) {
    if (name == "Rn1") return TestId::Rn1;
    if (name == "Rn2") return TestId::Rn2;
    if (name == "Rn1*") return TestId::Rn1Star;
    if (name == "Rn2*") return TestId::Rn2Star;
    throw py::value_error("unknown test id: " + name);
}

const RLaw& shared_rlaw() {
    static RLaw law = RLaw::load_or_generate(kDefaultRTableSize,
                                             kDefaultRTableSeed,
                                             rlaw_cache_dir());
    return law;
}

py::dict theta_dict(const Theta& t) {
    py::dict d;
    d["mu1"] = t.mu1;
    d["mu2"] = t.mu2;
    d["sigma1"] = t.sigma1;
    d["sigma2"] = t.sigma2;
    d["rho"] = t.rho;
    return d;
}

}  // namespace

PYBIND11_MODULE(_uplrt, m) {
    m.doc() = "Likelihood-ratio homogeneity tests for unordered paired data";

    m.def("run_tests",
          [](const std::vector<std::pair<double, double>>& rows,
             std::uint64_t seed) {
              const UnorderedDataset ds = make_dataset(rows);
              FitOptions opts;
              opts.seed = seed;
              const CoefficientSet cs = CoefficientSet::paper_defaults();
              const TestReport rep = run_all(ds, opts, cs, shared_rlaw());
              py::dict out;
              out["n"] = rep.n;
              const TestId ids[4] = {TestId::Rn1, TestId::Rn2, TestId::Rn1Star,
                                     TestId::Rn2Star};
              for (TestId id : ids) {
                  const int k = static_cast<int>(id);
                  py::dict t;
                  if (rep.ok(id)) {
                      t["statistic"] = rep.statistic(id);
                      t["p_raw"] = rep.p_raw[k];
                      t["p_adjusted"] = rep.p_adj[k];
                  } else {
                      t["error"] = rep.errors[k];
                  }
                  out[test_name(id)] = t;
              }
              py::list fits;
              for (const auto& f : rep.fits) {
                  py::dict fd;
                  fd["constraint"] = constraint_name(f.constraint);
                  fd["theta"] = theta_dict(f.theta);
                  fd["loglik"] = f.loglik;
                  fits.append(fd);
              }
              out["fits"] = fits;
              return out;
          },
          py::arg("pairs"), py::arg("seed") = 20240101,
          "Run all four LRTs on a list of (y1, y2) pairs");

    m.def("fit_mle",
          [](const std::vector<std::pair<double, double>>& rows,
             const std::string& constraint, std::uint64_t seed) {
              const UnorderedDataset ds = make_dataset(rows);
              Constraint c;
              if (constraint == "null_rho0") c = Constraint::NullRho0;
              else if (constraint == "eqvar_rho0") c = Constraint::EqvarRho0;
              else if (constraint == "free_rho0") c = Constraint::FreeRho0;
              else if (constraint == "null_rhofree") c = Constraint::NullRhoFree;
              else if (constraint == "eqvar_rhofree") c = Constraint::EqvarRhoFree;
              else if (constraint == "free") c = Constraint::Free;
              else throw py::value_error("unknown constraint: " + constraint);
              FitOptions opts;
              opts.seed = seed;
              const FitResult f = fit(ds, c, opts);
              py::dict out = theta_dict(f.theta);
              out["loglik"] = f.loglik;
              out["converged"] = f.converged;
              return out;
          },
          py::arg("pairs"), py::arg("constraint"), py::arg("seed") = 20240101);

    m.def("log_likelihood",
          [](const std::vector<std::pair<double, double>>& rows, double mu1,
             double mu2, double sigma1, double sigma2, double rho) {
              return log_likelihood(make_dataset(rows),
                                    Theta(mu1, mu2, sigma1, sigma2, rho));
          },
          py::arg("pairs"), py::arg("mu1"), py::arg("mu2"), py::arg("sigma1"),
          py::arg("sigma2"), py::arg("rho"));

    m.def("adjusted_pvalue",
          [](const std::string& test, double t, std::size_t n) {
              return adjusted_pvalue(test_id_from_name(test), t, n,
                                     CoefficientSet::paper_defaults(),
                                     shared_rlaw()).p;
          },
          py::arg("test"), py::arg("statistic"), py::arg("n"));

    m.def("raw_pvalue",
          [](const std::string& test, double t) {
              return raw_pvalue(test_id_from_name(test), t, shared_rlaw());
          },
          py::arg("test"), py::arg("statistic"));

    m.def("chibar_tail", &chibar_tail, py::arg("t"), py::arg("weight"));
    m.def("rstar_cdf", &rstar_cdf, py::arg("x"));
    m.def("rstar_quantile", &rstar_quantile, py::arg("alpha"));
    m.def("r_quantile",
          [](double alpha) { return r_quantile(alpha, shared_rlaw()); },
          py::arg("alpha"));

    m.def("generate_pairs",
          [](std::size_t n, double mu1, double mu2, double sigma1, double sigma2,
             double rho, std::uint64_t seed) {
              Rng rng(seed);
              const UnorderedDataset ds = generate_dataset(
                  n, Theta(mu1, mu2, sigma1, sigma2, rho), rng);
              std::vector<std::pair<double, double>> out;
              out.reserve(ds.n());
              for (const auto& p : ds.pairs) out.emplace_back(p.y_lo, p.y_hi);
              return out;
          },
          py::arg("n"), py::arg("mu1"), py::arg("mu2"), py::arg("sigma1"),
          py::arg("sigma2"), py::arg("rho"), py::arg("seed") = 20240101);

    m.attr("__version__") = library_version();
}
