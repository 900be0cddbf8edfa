#pragma once

#include "plprep/models/model.hpp"
#include "plprep/num/optimize.hpp"

namespace plprep {

// Equicorrelated normal: mean mu * 1_q, variance sigma2, correlation rho.
struct MvnCsParams {
  double mu = 0.0;
  double sigma2 = 1.0;
  double rho = 0.0;

  MvnCsParams() = default;
  // Throws DomainError outside sigma2 > 0, -1/(q-1) < rho < 1.
  MvnCsParams(double mu, double sigma2, double rho, std::size_t q);

  Vector to_vector() const;
  static MvnCsParams from_vector(const Vector& theta, std::size_t q);
};

class MvnCsModel final : public PairwiseModel {
 public:
  explicit MvnCsModel(std::size_t q);

  std::string name() const override;
  std::size_t param_dim() const override { return 3; }
  std::vector<std::string> param_names() const override { return {"mu", "sigma2", "rho"}; }
  bool in_domain(const Vector& theta) const override;
  double unit_loglik(const Vector& theta, const DataMatrix& data, std::size_t i) const override;
  Vector unit_score(const Vector& theta, const DataMatrix& data, std::size_t i) const override;
  DataMatrix simulate(const Vector& theta, std::size_t n, num::RngStream& rng) const override;
  Vector start_point(const DataMatrix& data) const override;
  double pairwise_loglik(const Vector& theta, const DataMatrix& data) const override;

  std::size_t q() const { return q_; }

 private:
  std::size_t q_;
};

// Closed form of the pairwise log-likelihood through within-unit and
// between-unit sums of squares. Omits the theta-free constant
// -n q(q-1)/2 log(2 pi).
double mvn_pairwise_loglik(const MvnCsParams& params, const DataMatrix& data);

// Full multivariate normal log-likelihood (constant -nq/2 log(2 pi) included).
double mvn_full_loglik(const MvnCsParams& params, const DataMatrix& data);

num::MaximizeResult mvn_full_mle(const DataMatrix& data, const Vector& start);

// Full log-likelihood ratio 2[l(theta_hat) - l(theta)], clipped at zero.
double mvn_w(const Vector& theta, const Vector& theta_hat, const DataMatrix& data);

}  // namespace plprep
