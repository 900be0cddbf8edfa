#pragma once

namespace plprep::num {

double std_normal_pdf(double x);

// Saturates to exactly 0 / 1 far in the tails.
double std_normal_cdf(double x);

// P(Z1 <= h, Z2 <= k) for a standard bivariate normal with correlation rho.
// Throws DomainError unless |rho| < 1.
double bvn_cdf(double h, double k, double rho);

double bvn_pdf(double h, double k, double rho);

// Partial derivatives of bvn_cdf with respect to h and k (d/drho is bvn_pdf).
double bvn_cdf_dh(double h, double k, double rho);

double chi2_cdf(double x, double df);
double chi2_quantile(double p, double df);

}  // namespace plprep::num
