#pragma once

#include <memory>
#include <string>
#include <vector>

#include "plprep/models/data.hpp"
#include "plprep/num/rng.hpp"

namespace plprep {

// A parametric model seen through its unweighted pairwise log-likelihood.
// Implementations are immutable after construction and safe to share.
class PairwiseModel {
 public:
  virtual ~PairwiseModel() = default;

  virtual std::string name() const = 0;
  virtual std::size_t param_dim() const = 0;
  virtual std::vector<std::string> param_names() const = 0;
  virtual bool in_domain(const Vector& theta) const = 0;

  // Pairwise log-likelihood contribution of unit i (sum over pairs j < h).
  virtual double unit_loglik(const Vector& theta, const DataMatrix& data, std::size_t i) const = 0;
  // Gradient of unit_loglik with respect to theta.
  virtual Vector unit_score(const Vector& theta, const DataMatrix& data, std::size_t i) const = 0;

  virtual DataMatrix simulate(const Vector& theta, std::size_t n, num::RngStream& rng) const = 0;
  // Method-of-moments style start point for the pairwise likelihood maximizer.
  virtual Vector start_point(const DataMatrix& data) const = 0;

  virtual double pairwise_loglik(const Vector& theta, const DataMatrix& data) const;
  // n x p matrix; row i is the score contribution of unit i.
  virtual Matrix score_matrix(const Vector& theta, const DataMatrix& data) const;
  Vector total_score(const Vector& theta, const DataMatrix& data) const;

  void require_domain(const Vector& theta) const;
};

using ModelPtr = std::shared_ptr<const PairwiseModel>;

// Restricts a model to a subset of its parameters; the remaining components
// are held at fixed values (e.g. a known mean).
class FixedComponentsModel final : public PairwiseModel {
 public:
  FixedComponentsModel(ModelPtr base, std::vector<std::size_t> free_components, Vector full_theta);

  std::string name() const override;
  std::size_t param_dim() const override { return free_.size(); }
  std::vector<std::string> param_names() const override;
  bool in_domain(const Vector& theta) const override;
  double unit_loglik(const Vector& theta, const DataMatrix& data, std::size_t i) const override;
  Vector unit_score(const Vector& theta, const DataMatrix& data, std::size_t i) const override;
  DataMatrix simulate(const Vector& theta, std::size_t n, num::RngStream& rng) const override;
  Vector start_point(const DataMatrix& data) const override;
  double pairwise_loglik(const Vector& theta, const DataMatrix& data) const override;
  Matrix score_matrix(const Vector& theta, const DataMatrix& data) const override;

  Vector expand(const Vector& theta) const;
  Vector restrict(const Vector& full) const;
  const PairwiseModel& base() const { return *base_; }

 private:
  ModelPtr base_;
  std::vector<std::size_t> free_;
  Vector full_;
};

}  // namespace plprep
