#pragma once

#include <span>
#include <vector>

namespace plprep::num {

// Law of sum_j lambda_j Z_j^2 with Z_j iid standard normal.
class WeightedChiSq {
 public:
  // Tiny negatives (|l| < 1e-10 max|l|) are clipped to zero; anything more
  // negative than -1e-8 max|l| is rejected with a DomainError, as is a law
  // without a positive weight.
  explicit WeightedChiSq(std::span<const double> lambdas);

  const std::vector<double>& lambdas() const { return lambdas_; }
  std::size_t positive_count() const;
  double mean() const;
  double variance() const;

 private:
  std::vector<double> lambdas_;
};

struct ImhofDiagnostics {
  double upper_limit = 0.0;       // last abscissa reached by direct integration
  double truncation_bound = 0.0;  // analytic bound on the neglected tail
  double error_estimate = 0.0;
  int tail_segments = 0;
  bool extrapolated = false;
};

// P(Q <= x) by numerical inversion of the characteristic function.
double imhof_cdf(double x, const WeightedChiSq& law, ImhofDiagnostics* diag = nullptr);

// Solves imhof_cdf(q) = p by bracketing and bisection.
double imhof_quantile(double p, const WeightedChiSq& law);

}  // namespace plprep::num
