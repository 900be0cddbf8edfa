#include "plprep/models/model.hpp"

#include <sstream>

#include "plprep/error.hpp"

namespace plprep {

double PairwiseModel::pairwise_loglik(const Vector& theta, const DataMatrix& data) const {
  double s = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) s += unit_loglik(theta, data, i);
  return s;
}

Matrix PairwiseModel::score_matrix(const Vector& theta, const DataMatrix& data) const {
  Matrix s(static_cast<Eigen::Index>(data.n()), static_cast<Eigen::Index>(param_dim()));
  for (std::size_t i = 0; i < data.n(); ++i) s.row(static_cast<Eigen::Index>(i)) = unit_score(theta, data, i).transpose();
  return s;
}

Vector PairwiseModel::total_score(const Vector& theta, const DataMatrix& data) const {
  return score_matrix(theta, data).colwise().sum().transpose();
}

void PairwiseModel::require_domain(const Vector& theta) const {
  if (static_cast<std::size_t>(theta.size()) != param_dim() || !in_domain(theta)) {
    std::ostringstream os;
    os << name() << ": parameter (" << theta.transpose() << ") outside the parameter space";
    throw DomainError(os.str());
  }
}

FixedComponentsModel::FixedComponentsModel(ModelPtr base, std::vector<std::size_t> free_components,
                                           Vector full_theta)
    : base_(std::move(base)), free_(std::move(free_components)), full_(std::move(full_theta)) {
  if (!base_) throw DomainError("FixedComponentsModel: null base model");
  if (static_cast<std::size_t>(full_.size()) != base_->param_dim())
    throw DomainError("FixedComponentsModel: full parameter has the wrong dimension");
  if (free_.empty()) throw DomainError("FixedComponentsModel: no free components");
  for (std::size_t k : free_)
    if (k >= base_->param_dim()) throw DomainError("FixedComponentsModel: free component out of range");
}

std::string FixedComponentsModel::name() const {
  std::ostringstream os;
  os << base_->name() << "[";
  const auto names = base_->param_names();
  for (std::size_t k = 0; k < free_.size(); ++k) os << (k ? "," : "") << names[free_[k]];
  os << "]";
  return os.str();
}

std::vector<std::string> FixedComponentsModel::param_names() const {
  const auto names = base_->param_names();
  std::vector<std::string> out;
  for (std::size_t k : free_) out.push_back(names[k]);
  return out;
}

Vector FixedComponentsModel::expand(const Vector& theta) const {
  Vector full = full_;
  for (std::size_t k = 0; k < free_.size(); ++k) full[static_cast<Eigen::Index>(free_[k])] = theta[static_cast<Eigen::Index>(k)];
  return full;
}

Vector FixedComponentsModel::restrict(const Vector& full) const {
  Vector t(static_cast<Eigen::Index>(free_.size()));
  for (std::size_t k = 0; k < free_.size(); ++k) t[static_cast<Eigen::Index>(k)] = full[static_cast<Eigen::Index>(free_[k])];
  return t;
}

bool FixedComponentsModel::in_domain(const Vector& theta) const {
  return static_cast<std::size_t>(theta.size()) == free_.size() && base_->in_domain(expand(theta));
}

double FixedComponentsModel::unit_loglik(const Vector& theta, const DataMatrix& data, std::size_t i) const {
  return base_->unit_loglik(expand(theta), data, i);
}

Vector FixedComponentsModel::unit_score(const Vector& theta, const DataMatrix& data, std::size_t i) const {
  return restrict(base_->unit_score(expand(theta), data, i));
}

DataMatrix FixedComponentsModel::simulate(const Vector& theta, std::size_t n, num::RngStream& rng) const {
  return base_->simulate(expand(theta), n, rng);
}

Vector FixedComponentsModel::start_point(const DataMatrix& data) const {
  return restrict(base_->start_point(data));
}

double FixedComponentsModel::pairwise_loglik(const Vector& theta, const DataMatrix& data) const {
  return base_->pairwise_loglik(expand(theta), data);
}

Matrix FixedComponentsModel::score_matrix(const Vector& theta, const DataMatrix& data) const {
  const Matrix full = base_->score_matrix(expand(theta), data);
  Matrix out(full.rows(), static_cast<Eigen::Index>(free_.size()));
  for (std::size_t k = 0; k < free_.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = full.col(static_cast<Eigen::Index>(free_[k]));
  return out;
}

}  // namespace plprep
