#include "plprep/inference/statistics.hpp"

#include <cmath>
#include <limits>

#include "plprep/error.hpp"

namespace plprep {

std::string to_string(StatisticKind k) {
  switch (k) {
    case StatisticKind::PW: return "pw";
    case StatisticKind::PW_W: return "pw_w";
    case StatisticKind::PW_S: return "pw_s";
    case StatisticKind::PW_1: return "pw_1";
    case StatisticKind::PW_CB: return "pw_cb";
    case StatisticKind::PW_INV: return "pw_inv";
    case StatisticKind::PW_US: return "pw_us";
  }
  return "?";
}

StatisticKind statistic_from_string(const std::string& s) {
  for (auto k : {StatisticKind::PW, StatisticKind::PW_W, StatisticKind::PW_S, StatisticKind::PW_1, StatisticKind::PW_CB,
                 StatisticKind::PW_INV, StatisticKind::PW_US})
    if (to_string(k) == s) return k;
  throw ParseError("unknown statistic '" + s + "'");
}

Reference reference_for(StatisticKind k) {
  switch (k) {
    case StatisticKind::PW: return Reference::WeightedChiSquare;
    case StatisticKind::PW_US: return Reference::Prepivot;
    default: return Reference::ChiSquare;
  }
}

MpleResult mple(const PairwiseModel& model, const DataMatrix& data, const Vector& start) {
  model.require_domain(start);
  const auto f = [&](const Vector& t) { return model.in_domain(t) ? model.pairwise_loglik(t, data) : -std::numeric_limits<double>::infinity(); };
  const auto g = [&](const Vector& t) { return model.total_score(t, data); };
  const double tol_base = 1e-6;
  const auto tol_at = [&](const Vector& t) { return tol_base * (1.0 + t.norm()); };

  num::MaximizeOptions opts;
  opts.max_iterations = 300;
  const num::MaximizeResult r = num::maximize(f, start, 0.1 * tol_at(start), g, opts);

  MpleResult out;
  Vector x = r.argmax;
  double fx = r.value;
  Vector score = g(x);
  int iterations = r.iterations;

  // Newton polish on the score equation.
  for (int it = 0; it < 30 && score.norm() > 0.1 * tol_at(x); ++it, ++iterations) {
    Matrix jac;
    try {
      jac = -static_cast<double>(data.n()) * h_hat(model, x, data);
    } catch (const NumericError&) {
      break;
    }
    Eigen::LDLT<Matrix> ldlt(jac);
    if (ldlt.info() != Eigen::Success) break;
    const Vector step = -ldlt.solve(score);
    if (!step.allFinite()) break;
    bool moved = false;
    for (double t = 1.0; t > 1e-6; t *= 0.5) {
      const Vector xn = x + t * step;
      if (!model.in_domain(xn)) continue;
      const Vector sn = g(xn);
      if (sn.norm() < score.norm()) {
        x = xn;
        score = sn;
        fx = f(xn);
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }

  out.theta_hat = x;
  out.loglik = fx;
  out.score_norm = score.norm();
  out.iterations = iterations;
  out.converged = out.score_norm <= tol_at(x) && fx >= f(start) - 1e-9 * (1.0 + std::abs(fx));
  return out;
}

double pw_us(const Matrix& scores) {
  if (scores.rows() == 0) throw DomainError("pw_us: empty score matrix");
  return scores.colwise().sum().squaredNorm() / static_cast<double>(scores.rows());
}

double pw(double loglik_at_hat, double loglik_at_theta) {
  const double v = 2.0 * (loglik_at_hat - loglik_at_theta);
  if (v < 0.0) {
    if (v < -1e-8 * (1.0 + std::abs(loglik_at_hat))) throw NumericError("pw: negative pairwise likelihood ratio (theta_hat is not the maximizer)");
    return 0.0;
  }
  return v;
}

std::optional<Vector> pw_limit_weights(const InfoPair& info) { return num::relative_eigvals(info.H, info.J); }

std::optional<double> pw_w(const Vector& theta, const Vector& theta_hat, const InfoPair& info, std::size_t n) {
  const auto vinv = info.godambe_inverse_variance();
  if (!vinv) return std::nullopt;
  const Vector d = theta_hat - theta;
  return static_cast<double>(n) * d.dot(*vinv * d);
}

std::optional<double> pw_s(const Matrix& scores, const InfoPair& info) {
  const Vector ps = scores.colwise().sum().transpose();
  const auto qf = num::spd_inverse_quadform(info.J, ps);
  if (!qf) return std::nullopt;
  return *qf / static_cast<double>(scores.rows());
}

std::optional<double> pw_1(double pw_value, const InfoPair& info) {
  const auto lambdas = pw_limit_weights(info);
  if (!lambdas) return std::nullopt;
  const double kappa = lambdas->mean();
  if (!(kappa > 0.0)) return std::nullopt;
  return pw_value / kappa;
}

std::optional<double> pw_cb(double pw_value, const Vector& theta, const Vector& theta_hat, const InfoPair& info) {
  const auto vinv = info.godambe_inverse_variance();
  if (!vinv) return std::nullopt;
  if (pw_value == 0.0) return 0.0;
  const Vector d = theta_hat - theta;
  const double den = d.dot(info.H * d);
  if (!(den > 0.0)) return std::nullopt;
  return pw_value * d.dot(*vinv * d) / den;
}

std::optional<double> pw_inv(double pw_value, const Matrix& scores, const InfoPair& info) {
  const Vector ps = scores.colwise().sum().transpose();
  const auto num_qf = num::spd_inverse_quadform(info.J, ps);
  const auto den_qf = num::spd_inverse_quadform(info.H, ps);
  if (!num_qf || !den_qf) return std::nullopt;
  if (pw_value == 0.0) return 0.0;
  if (!(*den_qf > 0.0)) return std::nullopt;
  return pw_value * *num_qf / *den_qf;
}

}  // namespace plprep
