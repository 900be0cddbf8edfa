#pragma once

#include "plprep/models/model.hpp"

namespace plprep {

// theta = (beta_1, ..., beta_p, rho); latent variance fixed at 1.
struct ProbitParams {
  Vector beta;
  double rho = 0.0;

  ProbitParams() = default;
  // Throws DomainError unless -1/(q-1) < rho < 1 and beta is finite.
  ProbitParams(Vector beta, double rho, std::size_t q);

  Vector to_vector() const;
  static ProbitParams from_vector(const Vector& theta, std::size_t q);
};

// Four joint cell probabilities of a dichotomized standard bivariate normal
// with means a, b: P(1,1), P(1,0), P(0,1), P(0,0).
struct PairCells {
  double p11, p10, p01, p00;
};
PairCells pair_cells(double a, double b, double rho);

// Correlated binary responses from a thresholded equicorrelated latent
// normal: y_ij = 1{z_ij >= 0}, z_i ~ N_q(X_i beta, Sigma). Designs have an
// intercept column followed by U(-1, 1) covariates.
class ProbitModel final : public PairwiseModel {
 public:
  static constexpr double kCellFloor = 1e-12;

  ProbitModel(std::size_t q, std::size_t n_beta, bool finite_difference_scores = false);

  std::string name() const override;
  std::size_t param_dim() const override { return n_beta_ + 1; }
  std::vector<std::string> param_names() const override;
  bool in_domain(const Vector& theta) const override;
  double unit_loglik(const Vector& theta, const DataMatrix& data, std::size_t i) const override;
  Vector unit_score(const Vector& theta, const DataMatrix& data, std::size_t i) const override;
  DataMatrix simulate(const Vector& theta, std::size_t n, num::RngStream& rng) const override;
  Vector start_point(const DataMatrix& data) const override;

  // Log-likelihood contribution of the pair (j, k) of unit i.
  double pair_loglik(const Vector& theta, const DataMatrix& data, std::size_t i, std::size_t j, std::size_t k) const;

  std::size_t q() const { return q_; }
  std::size_t n_beta() const { return n_beta_; }

 private:
  Vector analytic_score(const Vector& theta, const DataMatrix& data, std::size_t i) const;
  Vector fd_score(const Vector& theta, const DataMatrix& data, std::size_t i) const;
  void check_data(const DataMatrix& data) const;

  std::size_t q_;
  std::size_t n_beta_;
  bool fd_scores_;
};

}  // namespace plprep
