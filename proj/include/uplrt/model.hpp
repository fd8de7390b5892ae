#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace uplrt {

struct parameter_domain_error : std::domain_error {
    using std::domain_error::domain_error;
};

struct degenerate_data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bivariate-normal parameters (mu1, mu2, sigma1, sigma2, rho).
struct Theta {
    double mu1;
    double mu2;
    double sigma1;
    double sigma2;
    double rho;

    Theta(double mu1_, double mu2_, double sigma1_, double sigma2_, double rho_)
        : mu1(mu1_), mu2(mu2_), sigma1(sigma1_), sigma2(sigma2_), rho(rho_) {
        validate();
    }

    void validate() const {
        if (!(sigma1 > 0.0) || !(sigma2 > 0.0))
            throw parameter_domain_error("Theta: scales must be positive");
        if (!(rho > -1.0 && rho < 1.0))
            throw parameter_domain_error("Theta: |rho| must be < 1");
    }
};

// Half-sum / half-difference coordinates (mu, sigma_plus, beta0, beta1, eta),
// the coordinates in which the log-likelihood separates into a normal part
// for Z1 = (Y1+Y2)/2 and a symmetric two-component mixture part for
// Z2 = (Y2-Y1)/2.
struct ReparamTheta {
    double mu;
    double sigma_plus;
    double beta0;
    double beta1;
    double eta;

    ReparamTheta(double mu_, double sigma_plus_, double beta0_, double beta1_,
                 double eta_)
        : mu(mu_), sigma_plus(sigma_plus_), beta0(beta0_), beta1(beta1_), eta(eta_) {
        if (!(sigma_plus > 0.0) || !(eta > 0.0))
            throw parameter_domain_error("ReparamTheta: sigma_plus and eta must be positive");
    }

    double delta() const { return beta0 + mu * beta1; }
    double sigma_minus() const;
    double xi() const;
};

struct UnorderedPair {
    double y_lo;
    double y_hi;

    UnorderedPair(double a, double b)
        : y_lo(a < b ? a : b), y_hi(a < b ? b : a) {}
};

struct UnorderedDataset {
    std::vector<UnorderedPair> pairs;

    UnorderedDataset() = default;
    explicit UnorderedDataset(std::vector<UnorderedPair> p) : pairs(std::move(p)) {}

    std::size_t n() const { return pairs.size(); }
};

double pair_log_density(const UnorderedPair& pair, const Theta& theta);
double log_likelihood(const UnorderedDataset& ds, const Theta& theta);

ReparamTheta to_reparam(const Theta& theta);
Theta from_reparam(const ReparamTheta& r);

double decomposed_log_likelihood(const UnorderedDataset& ds, const ReparamTheta& r);

// The two blocks of the decomposition, exposed separately because the
// rho-free constrained fits maximize them independently.
double loglik_z1_block(const UnorderedDataset& ds, double mu, double sigma_plus);
double loglik_z2_block(const UnorderedDataset& ds, double beta0, double beta1,
                       double eta);

}  // namespace uplrt
