#include "plprep/models/mvn_model.hpp"

#include <limits>
#include <cmath>
#include <numbers>
#include <sstream>

#include "plprep/error.hpp"

namespace plprep {
namespace {

bool params_valid(double sigma2, double rho, std::size_t q) {
  return std::isfinite(sigma2) && std::isfinite(rho) && sigma2 > 0.0 &&
         rho > -1.0 / (static_cast<double>(q) - 1.0) && rho < 1.0;
}

struct UnitSums {
  double s1;  // sum of (y_ij - mu)
  double s2;  // sum of (y_ij - mu)^2
};

UnitSums unit_sums(const DataMatrix& data, std::size_t i, double mu) {
  UnitSums u{0.0, 0.0};
  const auto row = data.y.row(static_cast<Eigen::Index>(i));
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    const double a = row[j] - mu;
    u.s1 += a;
    u.s2 += a * a;
  }
  return u;
}

}  // namespace

MvnCsParams::MvnCsParams(double mu_, double sigma2_, double rho_, std::size_t q) : mu(mu_), sigma2(sigma2_), rho(rho_) {
  if (!std::isfinite(mu) || !params_valid(sigma2, rho, q)) {
    std::ostringstream os;
    os << "MvnCsParams: (mu=" << mu << ", sigma2=" << sigma2 << ", rho=" << rho << ") outside the parameter space";
    throw DomainError(os.str());
  }
}

Vector MvnCsParams::to_vector() const { return Vector{{mu, sigma2, rho}}; }

MvnCsParams MvnCsParams::from_vector(const Vector& theta, std::size_t q) {
  if (theta.size() != 3) throw DomainError("MvnCsParams: expected 3 components");
  return MvnCsParams(theta[0], theta[1], theta[2], q);
}

MvnCsModel::MvnCsModel(std::size_t q) : q_(q) {
  if (q < 2) throw DomainError("MvnCsModel: q must be >= 2");
}

std::string MvnCsModel::name() const { return "mvn(q=" + std::to_string(q_) + ")"; }

bool MvnCsModel::in_domain(const Vector& theta) const {
  return theta.size() == 3 && std::isfinite(theta[0]) && params_valid(theta[1], theta[2], q_);
}

double MvnCsModel::unit_loglik(const Vector& theta, const DataMatrix& data, std::size_t i) const {
  if (!in_domain(theta)) return -std::numeric_limits<double>::infinity();
  const double sigma2 = theta[1], rho = theta[2];
  const double q = static_cast<double>(q_);
  const double pairs = q * (q - 1.0) / 2.0;
  const double d = (1.0 - rho) * (1.0 + rho);
  const UnitSums u = unit_sums(data, i, theta[0]);
  const double num = (q - 1.0 + rho) * u.s2 - rho * u.s1 * u.s1;
  return -pairs * std::log(sigma2) - 0.5 * pairs * std::log(d) - num / (2.0 * sigma2 * d);
}

Vector MvnCsModel::unit_score(const Vector& theta, const DataMatrix& data, std::size_t i) const {
  require_domain(theta);
  const double sigma2 = theta[1], rho = theta[2];
  const double q = static_cast<double>(q_);
  const double pairs = q * (q - 1.0) / 2.0;
  const double d = (1.0 - rho) * (1.0 + rho);
  const UnitSums u = unit_sums(data, i, theta[0]);
  const double num = (q - 1.0 + rho) * u.s2 - rho * u.s1 * u.s1;
  Vector s(3);
  s[0] = u.s1 * (q - 1.0) / (sigma2 * (1.0 + rho));
  s[1] = -pairs / sigma2 + num / (2.0 * sigma2 * sigma2 * d);
  s[2] = pairs * rho / d - (u.s2 - u.s1 * u.s1) / (2.0 * sigma2 * d) - num * rho / (sigma2 * d * d);
  return s;
}

DataMatrix MvnCsModel::simulate(const Vector& theta, std::size_t n, num::RngStream& rng) const {
  const MvnCsParams par = MvnCsParams::from_vector(theta, q_);
  const auto qi = static_cast<Eigen::Index>(q_);
  Matrix sigma = Matrix::Constant(qi, qi, par.sigma2 * par.rho);
  sigma.diagonal().setConstant(par.sigma2);
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) throw DomainError("MvnCsModel::simulate: covariance not positive definite");
  const Matrix l = llt.matrixL();
  DataMatrix data;
  data.y.resize(static_cast<Eigen::Index>(n), qi);
  Vector z(qi);
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < qi; ++j) z[j] = rng.normal();
    data.y.row(static_cast<Eigen::Index>(i)) = (l * z).transpose().array() + par.mu;
  }
  return data;
}

Vector MvnCsModel::start_point(const DataMatrix& data) const {
  const double mu = data.y.mean();
  const Matrix c = data.y.array() - mu;
  const double q = static_cast<double>(q_);
  const double n = static_cast<double>(data.n());
  const double sigma2 = std::max(1e-8, c.squaredNorm() / (n * q));
  double cross = 0.0;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    const double s = c.row(i).sum();
    cross += s * s - c.row(i).squaredNorm();
  }
  double rho = cross / (n * q * (q - 1.0) * sigma2);
  const double lo = -1.0 / (q - 1.0);
  rho = std::clamp(rho, lo + 0.05 * (1.0 - lo), 0.95);
  return Vector{{mu, sigma2, rho}};
}

double MvnCsModel::pairwise_loglik(const Vector& theta, const DataMatrix& data) const {
  if (!in_domain(theta)) return -std::numeric_limits<double>::infinity();
  return mvn_pairwise_loglik(MvnCsParams::from_vector(theta, q_), data);
}

double mvn_pairwise_loglik(const MvnCsParams& par, const DataMatrix& data) {
  const double n = static_cast<double>(data.n());
  const double q = static_cast<double>(data.q());
  if (!params_valid(par.sigma2, par.rho, data.q())) throw DomainError("mvn_pairwise_loglik: parameter outside the space");
  const double grand = data.y.mean();
  double ss_within = 0.0;   // sum_i sum_h (y_ih - ybar_i)^2
  double ss_between = 0.0;  // sum_i (ybar_i - ybar)^2
  for (Eigen::Index i = 0; i < data.y.rows(); ++i) {
    const double m = data.y.row(i).mean();
    ss_within += (data.y.row(i).array() - m).square().sum();
    ss_between += (m - grand) * (m - grand);
  }
  const double s2 = par.sigma2, r = par.rho;
  return -n * q * (q - 1.0) / 2.0 * std::log(s2) - n * q * (q - 1.0) / 4.0 * std::log(1.0 - r * r) -
         (q - 1.0 + r) / (2.0 * s2 * (1.0 - r * r)) * ss_within -
         (q * (q - 1.0) * ss_between + n * q * (q - 1.0) * (grand - par.mu) * (grand - par.mu)) / (2.0 * s2 * (1.0 + r));
}

double mvn_full_loglik(const MvnCsParams& par, const DataMatrix& data) {
  const double q = static_cast<double>(data.q());
  if (!params_valid(par.sigma2, par.rho, data.q())) throw DomainError("mvn_full_loglik: parameter outside the space");
  // Eigenvalues of the compound-symmetric covariance.
  const double e_one = par.sigma2 * (1.0 + (q - 1.0) * par.rho);
  const double e_rest = par.sigma2 * (1.0 - par.rho);
  const double logdet = std::log(e_one) + (q - 1.0) * std::log(e_rest);
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.y.rows(); ++i) {
    const double m = data.y.row(i).mean();
    const double within = (data.y.row(i).array() - m).square().sum();
    const double dev = m - par.mu;
    total += -0.5 * q * std::log(2.0 * std::numbers::pi) - 0.5 * logdet - 0.5 * (within / e_rest + q * dev * dev / e_one);
  }
  return total;
}

num::MaximizeResult mvn_full_mle(const DataMatrix& data, const Vector& start) {
  const std::size_t q = data.q();
  const auto f = [&](const Vector& t) {
    if (t.size() != 3 || !params_valid(t[1], t[2], q) || !std::isfinite(t[0])) return -std::numeric_limits<double>::infinity();
    return mvn_full_loglik(MvnCsParams(t[0], t[1], t[2], q), data);
  };
  const double tol = 1e-7 * static_cast<double>(data.n());
  return num::maximize(f, start, tol);
}

double mvn_w(const Vector& theta, const Vector& theta_hat, const DataMatrix& data) {
  const std::size_t q = data.q();
  const double v = 2.0 * (mvn_full_loglik(MvnCsParams::from_vector(theta_hat, q), data) -
                          mvn_full_loglik(MvnCsParams::from_vector(theta, q), data));
  if (v < -1e-8 * (1.0 + std::abs(v))) throw NumericError("mvn_w: negative likelihood ratio, theta_hat is not the maximizer");
  return std::max(0.0, v);
}

}  // namespace plprep
