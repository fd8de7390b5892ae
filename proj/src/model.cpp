#include "uplrt/model.hpp"

#include <cmath>

#include "uplrt/special.hpp"

namespace uplrt {

namespace {

// Per-theta constants of the bivariate normal log-density, hoisted out of the
// data loop.
struct BvnConsts {
    double inv_s1, inv_s2, rho, inv_one_m_rho2, log_norm;

    explicit BvnConsts(const Theta& t)
        : inv_s1(1.0 / t.sigma1),
          inv_s2(1.0 / t.sigma2),
          rho(t.rho),
          inv_one_m_rho2(1.0 / (1.0 - t.rho * t.rho)),
          log_norm(-kLogTwoPi - std::log(t.sigma1) - std::log(t.sigma2)
                   - 0.5 * std::log(1.0 - t.rho * t.rho)) {}

    // log phi(x1, x2; theta)
    double log_density(double a, double b) const {
        // a, b are standardized coordinates (x1-mu1)/s1, (x2-mu2)/s2
        const double q = a * a - 2.0 * rho * a * b + b * b;
        return log_norm - 0.5 * q * inv_one_m_rho2;
    }
};

inline double pair_log_density_impl(const BvnConsts& c, const Theta& t,
                                    double y1, double y2) {
    const double a1 = (y1 - t.mu1) * c.inv_s1;
    const double b1 = (y2 - t.mu2) * c.inv_s2;
    const double a2 = (y2 - t.mu1) * c.inv_s1;
    const double b2 = (y1 - t.mu2) * c.inv_s2;
    return log_add_exp(c.log_density(a1, b1), c.log_density(a2, b2));
}

}  // namespace

double pair_log_density(const UnorderedPair& pair, const Theta& theta) {
    theta.validate();
    const BvnConsts c(theta);
    return pair_log_density_impl(c, theta, pair.y_lo, pair.y_hi);
}

double log_likelihood(const UnorderedDataset& ds, const Theta& theta) {
    theta.validate();
    const BvnConsts c(theta);
    double sum = 0.0;
    for (const auto& p : ds.pairs)
        sum += pair_log_density_impl(c, theta, p.y_lo, p.y_hi);
    return sum;
}

double ReparamTheta::sigma_minus() const {
    return std::sqrt(eta * eta + beta1 * beta1 * sigma_plus * sigma_plus);
}

double ReparamTheta::xi() const {
    return beta1 * sigma_plus / sigma_minus();
}

ReparamTheta to_reparam(const Theta& t) {
    const double mu = 0.5 * (t.mu1 + t.mu2);
    const double delta = 0.5 * (t.mu1 - t.mu2);
    const double s1sq = t.sigma1 * t.sigma1;
    const double s2sq = t.sigma2 * t.sigma2;
    const double cross = 2.0 * t.rho * t.sigma1 * t.sigma2;
    const double sp2 = 0.25 * (s1sq + s2sq + cross);
    const double sm2 = 0.25 * (s1sq + s2sq - cross);
    const double cov = 0.25 * (s1sq - s2sq);  // = xi * sigma_plus * sigma_minus
    const double sigma_plus = std::sqrt(sp2);
    const double beta1 = cov / sp2;           // (sigma_minus/sigma_plus) * xi
    const double beta0 = delta - mu * beta1;
    const double eta2 = sm2 - beta1 * beta1 * sp2;  // (1 - xi^2) sigma_minus^2
    if (!(eta2 > 0.0))
        throw parameter_domain_error("to_reparam: degenerate covariance");
    return ReparamTheta(mu, sigma_plus, beta0, beta1, std::sqrt(eta2));
}

Theta from_reparam(const ReparamTheta& r) {
    const double sp2 = r.sigma_plus * r.sigma_plus;
    const double sm2 = r.eta * r.eta + r.beta1 * r.beta1 * sp2;
    const double s1sq = sp2 + sm2 + 2.0 * r.beta1 * sp2;
    const double s2sq = sp2 + sm2 - 2.0 * r.beta1 * sp2;
    if (!(s1sq > 0.0) || !(s2sq > 0.0))
        throw parameter_domain_error("from_reparam: implied variances not positive");
    const double sigma1 = std::sqrt(s1sq);
    const double sigma2 = std::sqrt(s2sq);
    const double rho = (sp2 - sm2) / (sigma1 * sigma2);
    const double delta = r.delta();
    return Theta(r.mu + delta, r.mu - delta, sigma1, sigma2, rho);
}

double loglik_z1_block(const UnorderedDataset& ds, double mu, double sigma_plus) {
    const double inv_s = 1.0 / sigma_plus;
    const double log_s = std::log(sigma_plus);
    double sum = 0.0;
    for (const auto& p : ds.pairs) {
        const double z1 = 0.5 * (p.y_lo + p.y_hi);
        const double a = (z1 - mu) * inv_s;
        sum += -0.5 * a * a - 0.5 * kLogTwoPi - log_s;
    }
    return sum;
}

double loglik_z2_block(const UnorderedDataset& ds, double beta0, double beta1,
                       double eta) {
    const double inv_e = 1.0 / eta;
    const double log_e = std::log(eta);
    const double base = -0.5 * kLogTwoPi - log_e - 0.6931471805599453094;  // log 0.5
    double sum = 0.0;
    for (const auto& p : ds.pairs) {
        const double z1 = 0.5 * (p.y_lo + p.y_hi);
        const double z2 = 0.5 * (p.y_hi - p.y_lo);
        const double m = beta0 + beta1 * z1;
        const double a = (z2 - m) * inv_e;
        const double b = (-z2 - m) * inv_e;
        sum += base + log_add_exp(-0.5 * a * a, -0.5 * b * b);
    }
    return sum;
}

double decomposed_log_likelihood(const UnorderedDataset& ds, const ReparamTheta& r) {
    return loglik_z1_block(ds, r.mu, r.sigma_plus)
         + loglik_z2_block(ds, r.beta0, r.beta1, r.eta);
}

}  // namespace uplrt
