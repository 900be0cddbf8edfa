#include "plprep/models/probit_model.hpp"

#include <limits>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "plprep/error.hpp"
#include "plprep/num/normal.hpp"

namespace plprep {
namespace {

bool rho_valid(double rho, std::size_t q) {
  return std::isfinite(rho) && rho > -1.0 / (static_cast<double>(q) - 1.0) && rho < 1.0;
}

double cell_for(const PairCells& c, bool yj, bool yk) {
  if (yj) return yk ? c.p11 : c.p10;
  return yk ? c.p01 : c.p00;
}

}  // namespace

ProbitParams::ProbitParams(Vector beta_, double rho_, std::size_t q) : beta(std::move(beta_)), rho(rho_) {
  if (beta.size() == 0 || !beta.allFinite() || !rho_valid(rho, q)) {
    std::ostringstream os;
    os << "ProbitParams: (beta=" << beta.transpose() << ", rho=" << rho << ") outside the parameter space";
    throw DomainError(os.str());
  }
}

Vector ProbitParams::to_vector() const {
  Vector t(beta.size() + 1);
  t.head(beta.size()) = beta;
  t[beta.size()] = rho;
  return t;
}

ProbitParams ProbitParams::from_vector(const Vector& theta, std::size_t q) {
  if (theta.size() < 2) throw DomainError("ProbitParams: need at least one coefficient and rho");
  return ProbitParams(theta.head(theta.size() - 1), theta[theta.size() - 1], q);
}

PairCells pair_cells(double a, double b, double rho) {
  const double p11 = num::bvn_cdf(a, b, rho);
  const double pa = num::std_normal_cdf(a), pb = num::std_normal_cdf(b);
  return {p11, pa - p11, pb - p11, 1.0 - pa - pb + p11};
}

ProbitModel::ProbitModel(std::size_t q, std::size_t n_beta, bool finite_difference_scores)
    : q_(q), n_beta_(n_beta), fd_scores_(finite_difference_scores) {
  if (q < 2) throw DomainError("ProbitModel: q must be >= 2");
  if (n_beta < 1) throw DomainError("ProbitModel: need at least an intercept");
}

std::string ProbitModel::name() const {
  return "probit(q=" + std::to_string(q_) + ",p=" + std::to_string(n_beta_) + ")";
}

std::vector<std::string> ProbitModel::param_names() const {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < n_beta_; ++k) names.push_back("beta" + std::to_string(k + 1));
  names.push_back("rho");
  return names;
}

bool ProbitModel::in_domain(const Vector& theta) const {
  return static_cast<std::size_t>(theta.size()) == n_beta_ + 1 && theta.allFinite() &&
         rho_valid(theta[static_cast<Eigen::Index>(n_beta_)], q_);
}

void ProbitModel::check_data(const DataMatrix& data) const {
  if (!data.binary || data.q() != q_ || data.designs.size() != data.n() ||
      (data.n() > 0 && static_cast<std::size_t>(data.designs.front().cols()) != n_beta_))
    throw DomainError(name() + ": data do not match the model (binary panel with q x p designs expected)");
}

double ProbitModel::pair_loglik(const Vector& theta, const DataMatrix& data, std::size_t i, std::size_t j,
                                std::size_t k) const {
  const auto p = static_cast<Eigen::Index>(n_beta_);
  const Matrix& x = data.designs[i];
  const double rho = theta[p];
  const double a = x.row(static_cast<Eigen::Index>(j)).dot(theta.head(p));
  const double b = x.row(static_cast<Eigen::Index>(k)).dot(theta.head(p));
  const PairCells c = pair_cells(a, b, rho);
  const auto ii = static_cast<Eigen::Index>(i);
  const double prob = cell_for(c, data.y(ii, static_cast<Eigen::Index>(j)) == 1.0, data.y(ii, static_cast<Eigen::Index>(k)) == 1.0);
  return std::log(std::max(prob, kCellFloor));
}

double ProbitModel::unit_loglik(const Vector& theta, const DataMatrix& data, std::size_t i) const {
  if (!in_domain(theta)) return -std::numeric_limits<double>::infinity();
  check_data(data);
  const auto p = static_cast<Eigen::Index>(n_beta_);
  const Vector gamma = data.designs[i] * theta.head(p);
  const double rho = theta[p];
  const auto row = data.y.row(static_cast<Eigen::Index>(i));
  double s = 0.0;
  for (std::size_t j = 0; j + 1 < q_; ++j)
    for (std::size_t k = j + 1; k < q_; ++k) {
      const PairCells c = pair_cells(gamma[static_cast<Eigen::Index>(j)], gamma[static_cast<Eigen::Index>(k)], rho);
      const double prob = cell_for(c, row[static_cast<Eigen::Index>(j)] == 1.0, row[static_cast<Eigen::Index>(k)] == 1.0);
      s += std::log(std::max(prob, kCellFloor));
    }
  return s;
}

Vector ProbitModel::unit_score(const Vector& theta, const DataMatrix& data, std::size_t i) const {
  require_domain(theta);
  check_data(data);
  return fd_scores_ ? fd_score(theta, data, i) : analytic_score(theta, data, i);
}

Vector ProbitModel::analytic_score(const Vector& theta, const DataMatrix& data, std::size_t i) const {
  const auto p = static_cast<Eigen::Index>(n_beta_);
  const Matrix& x = data.designs[i];
  const Vector gamma = x * theta.head(p);
  const double rho = theta[p];
  const double s = std::sqrt((1.0 - rho) * (1.0 + rho));
  const auto row = data.y.row(static_cast<Eigen::Index>(i));

  const auto qi = static_cast<Eigen::Index>(q_);
  Vector cdf(qi), pdf(qi);
  for (Eigen::Index j = 0; j < qi; ++j) {
    cdf[j] = num::std_normal_cdf(gamma[j]);
    pdf[j] = num::std_normal_pdf(gamma[j]);
  }

  Vector grad_gamma = Vector::Zero(qi);  // d unit loglik / d gamma_j
  double grad_rho = 0.0;
  for (Eigen::Index j = 0; j + 1 < qi; ++j)
    for (Eigen::Index k = j + 1; k < qi; ++k) {
      const double a = gamma[j], b = gamma[k];
      const double p11 = num::bvn_cdf(a, b, rho);
      const double da = pdf[j] * num::std_normal_cdf((b - rho * a) / s);
      const double db = pdf[k] * num::std_normal_cdf((a - rho * b) / s);
      const double dr = num::bvn_pdf(a, b, rho);
      const bool yj = row[j] == 1.0, yk = row[k] == 1.0;
      double prob, pa, pb, pr;
      if (yj && yk) {
        prob = p11, pa = da, pb = db, pr = dr;
      } else if (yj) {
        prob = cdf[j] - p11, pa = pdf[j] - da, pb = -db, pr = -dr;
      } else if (yk) {
        prob = cdf[k] - p11, pa = -da, pb = pdf[k] - db, pr = -dr;
      } else {
        prob = 1.0 - cdf[j] - cdf[k] + p11, pa = -pdf[j] + da, pb = -pdf[k] + db, pr = dr;
      }
      if (prob <= kCellFloor) continue;  // clamped: locally constant
      grad_gamma[j] += pa / prob;
      grad_gamma[k] += pb / prob;
      grad_rho += pr / prob;
    }

  Vector score(p + 1);
  score.head(p) = x.transpose() * grad_gamma;
  score[p] = grad_rho;
  return score;
}

Vector ProbitModel::fd_score(const Vector& theta, const DataMatrix& data, std::size_t i) const {
  Vector g(theta.size());
  Vector tp = theta, tm = theta;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    const double h = 1e-6 * (1.0 + std::abs(theta[k]));
    tp[k] = theta[k] + h;
    tm[k] = theta[k] - h;
    g[k] = (unit_loglik(tp, data, i) - unit_loglik(tm, data, i)) / (2.0 * h);
    tp[k] = tm[k] = theta[k];
  }
  if (!g.allFinite()) throw NumericError(name() + ": finite-difference score left the parameter space");
  return g;
}

DataMatrix ProbitModel::simulate(const Vector& theta, std::size_t n, num::RngStream& rng) const {
  require_domain(theta);
  const auto p = static_cast<Eigen::Index>(n_beta_);
  const auto qi = static_cast<Eigen::Index>(q_);
  const double rho = theta[p];
  Matrix sigma = Matrix::Constant(qi, qi, rho);
  sigma.diagonal().setOnes();
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) throw DomainError("ProbitModel::simulate: latent covariance not positive definite");
  const Matrix l = llt.matrixL();

  DataMatrix data;
  data.binary = true;
  data.y.resize(static_cast<Eigen::Index>(n), qi);
  data.designs.reserve(n);
  Vector z(qi);
  for (std::size_t i = 0; i < n; ++i) {
    Matrix x(qi, p);
    for (Eigen::Index j = 0; j < qi; ++j) {
      x(j, 0) = 1.0;
      for (Eigen::Index c = 1; c < p; ++c) x(j, c) = rng.uniform(-1.0, 1.0);
    }
    for (Eigen::Index j = 0; j < qi; ++j) z[j] = rng.normal();
    const Vector latent = x * theta.head(p) + l * z;
    for (Eigen::Index j = 0; j < qi; ++j) data.y(static_cast<Eigen::Index>(i), j) = latent[j] >= 0.0 ? 1.0 : 0.0;
    data.designs.push_back(std::move(x));
  }
  return data;
}

Vector ProbitModel::start_point(const DataMatrix& data) const {
  check_data(data);
  // Marginal probit intercept from the overall success rate, slopes at zero,
  // rho from the average pairwise concordance of the binary outcomes.
  const double rate = std::clamp(data.y.mean(), 0.02, 0.98);
  Vector t = Vector::Zero(static_cast<Eigen::Index>(n_beta_ + 1));
  double lo = -8.0, hi = 8.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (num::std_normal_cdf(mid) < rate ? lo : hi) = mid;
  }
  t[0] = 0.5 * (lo + hi);
  double both = 0.0, pairs = 0.0;
  for (Eigen::Index i = 0; i < data.y.rows(); ++i)
    for (Eigen::Index j = 0; j + 1 < data.y.cols(); ++j)
      for (Eigen::Index k = j + 1; k < data.y.cols(); ++k) {
        both += data.y(i, j) * data.y(i, k);
        pairs += 1.0;
      }
  const double excess = both / pairs - rate * rate;
  const double denom = rate * (1.0 - rate);
  double rho = std::sin(std::numbers::pi / 2.0 * std::clamp(excess / denom, -0.5, 0.9));
  const double lo_rho = -1.0 / (static_cast<double>(q_) - 1.0);
  t[static_cast<Eigen::Index>(n_beta_)] = std::clamp(rho, lo_rho + 0.05 * (1.0 - lo_rho), 0.9);
  return t;
}

}  // namespace plprep
