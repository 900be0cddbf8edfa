#include "plprep/num/normal.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numbers>

#include "plprep/error.hpp"

namespace plprep::num {

double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double std_normal_cdf(double x) {
  if (std::isnan(x)) throw DomainError("std_normal_cdf: NaN argument");
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double bvn_pdf(double h, double k, double rho) {
  if (!(std::abs(rho) < 1.0)) throw DomainError("bvn_pdf: |rho| must be < 1");
  const double one_m = (1.0 - rho) * (1.0 + rho);
  const double q = (h * h - 2.0 * rho * h * k + k * k) / one_m;
  return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(one_m));
}

double bvn_cdf_dh(double h, double k, double rho) {
  if (!(std::abs(rho) < 1.0)) throw DomainError("bvn_cdf_dh: |rho| must be < 1");
  const double s = std::sqrt((1.0 - rho) * (1.0 + rho));
  return std_normal_pdf(h) * std_normal_cdf((k - rho * h) / s);
}

double chi2_cdf(double x, double df) {
  if (x <= 0.0) return 0.0;
  return boost::math::cdf(boost::math::chi_squared(df), x);
}

double chi2_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("chi2_quantile: p must lie in (0,1)");
  return boost::math::quantile(boost::math::chi_squared(df), p);
}

}  // namespace plprep::num
