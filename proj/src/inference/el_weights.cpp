#include "plprep/inference/el_weights.hpp"

#include <cmath>

#include "plprep/error.hpp"

namespace plprep {
namespace {

// Owen's pseudo-logarithm: log(z) above 1/n, quadratic continuation below.
struct LogStar {
  double n;
  double value(double z) const {
    if (z >= 1.0 / n) return std::log(z);
    const double nz = n * z;
    return -std::log(n) - 1.5 + 2.0 * nz - 0.5 * nz * nz;
  }
  double d1(double z) const { return z >= 1.0 / n ? 1.0 / z : 2.0 * n - n * n * z; }
  double d2(double z) const { return z >= 1.0 / n ? -1.0 / (z * z) : -n * n; }
};

bool sign_change(const Matrix& scores) {
  bool pos = false, neg = false, nonzero = false;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const double v = scores(i, 0);
    pos |= v > 0.0;
    neg |= v < 0.0;
    nonzero |= v != 0.0;
  }
  return (pos && neg) || !nonzero;
}

}  // namespace

WeightsOutcome try_solve_weights(const Matrix& scores) {
  const Eigen::Index n = scores.rows(), p = scores.cols();
  if (n <= p) throw DomainError("solve_weights: need more units than parameters");
  if (!scores.allFinite()) throw DomainError("solve_weights: non-finite scores");

  WeightsOutcome out;
  ResampleWeights& w = out.result;
  w.xi = Vector::Zero(p);

  if (p == 1 && !sign_change(scores)) {
    out.status = WeightsStatus::HullViolation;
    return out;
  }

  const double scale = std::max(1e-300, scores.cwiseAbs().maxCoeff());
  const double tol = 1e-13 * std::max(1.0, scale);
  const LogStar ls{static_cast<double>(n)};

  Vector xi = Vector::Zero(p);
  Vector z = Vector::Ones(n);
  const auto objective = [&](const Vector& x, Vector& zz) {
    zz = Vector::Ones(n) + scores * x;
    double f = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) f -= ls.value(zz[i]);
    return f;
  };
  double f = objective(xi, z);

  for (int it = 0; it <= kWeightsMaxIterations; ++it) {
    Vector grad = Vector::Zero(p);
    Matrix hess = Matrix::Zero(p, p);
    bool in_log_region = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto s = scores.row(i).transpose();
      grad -= ls.d1(z[i]) * s;
      hess.selfadjointView<Eigen::Lower>().rankUpdate(s, -ls.d2(z[i]));
      in_log_region &= z[i] >= 1.0 / static_cast<double>(n);
    }
    hess.triangularView<Eigen::StrictlyUpper>() = hess.transpose();
    // grad = -sum s_i / z_i = -n * (constraint residual) in the log region
    const double residual = grad.cwiseAbs().maxCoeff() / static_cast<double>(n);
    w.iterations = it;
    if (in_log_region && residual <= tol) {
      w.converged = true;
      break;
    }
    if (xi.norm() * scale > 1e12) {
      out.status = WeightsStatus::HullViolation;
      w.xi = xi;
      return out;
    }
    if (it == kWeightsMaxIterations) break;

    Eigen::LDLT<Matrix> ldlt(hess);
    Vector step = ldlt.info() == Eigen::Success ? Vector(-ldlt.solve(grad)) : Vector(-grad);
    if (!step.allFinite() || step.dot(grad) >= 0.0) step = -grad / std::max(1.0, hess.diagonal().maxCoeff());

    double t = 1.0;
    Vector zn;
    bool moved = false;
    // Near the solution the decrease is below the rounding of f; take the
    // plain Newton step there.
    if (-step.dot(grad) <= 1e-10 * (1.0 + std::abs(f))) {
      const Vector xn = xi + step;
      const double fn = objective(xn, zn);
      if (std::isfinite(fn) && fn <= f + 1e-10 * (1.0 + std::abs(f))) {
        xi = xn;
        f = fn;
        z = zn;
        continue;
      }
    }
    for (int k = 0; k < 60; ++k) {
      const Vector xn = xi + t * step;
      const double fn = objective(xn, zn);
      if (std::isfinite(fn) && fn <= f + 1e-4 * t * step.dot(grad)) {
        xi = xn;
        f = fn;
        z = zn;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) {
      // Line search stalled at rounding level; accept the full Newton step if
      // it does not increase the objective beyond rounding.
      const Vector xn = xi + step;
      const double fn = objective(xn, zn);
      if (!(std::isfinite(fn) && fn <= f + 1e-12 * (1.0 + std::abs(f)))) break;
      xi = xn;
      f = fn;
      z = zn;
    }
  }

  w.xi = xi;
  if (!w.converged) {
    out.status = xi.norm() * scale > 1e8 ? WeightsStatus::HullViolation : WeightsStatus::IterationLimit;
    return out;
  }
  w.weights = (static_cast<double>(n) * z).cwiseInverse();
  w.weights /= w.weights.sum();
  w.residual = (scores.transpose() * w.weights).cwiseAbs().maxCoeff();
  return out;
}

ResampleWeights solve_weights(const Matrix& scores) {
  WeightsOutcome out = try_solve_weights(scores);
  if (out.status == WeightsStatus::HullViolation)
    throw HullError("solve_weights: zero is not in the interior of the convex hull of the score contributions");
  return std::move(out.result);
}

bool hull_check(const Matrix& scores) {
  if (scores.cols() == 1) return sign_change(scores);
  if (scores.rows() <= scores.cols()) return false;
  return try_solve_weights(scores).status != WeightsStatus::HullViolation;
}

}  // namespace plprep
