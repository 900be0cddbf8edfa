#include "plprep/num/optimize.hpp"

#include <cmath>

#include "plprep/error.hpp"

namespace plprep::num {

Vector central_difference_gradient(const Objective& f, const Vector& x, double rel_step) {
  Vector g(x.size());
  Vector xp = x, xm = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = rel_step * (1.0 + std::abs(x[k]));
    xp[k] = x[k] + h;
    xm[k] = x[k] - h;
    g[k] = (f(xp) - f(xm)) / (2.0 * h);
    xp[k] = xm[k] = x[k];
  }
  return g;
}

MaximizeResult maximize(const Objective& f, const Vector& start, double tol, const Gradient& gradient,
                        const MaximizeOptions& options) {
  const auto grad = [&](const Vector& x) {
    return gradient ? gradient(x) : central_difference_gradient(f, x, options.fd_step);
  };

  MaximizeResult res;
  Vector x = start;
  double fx = f(x);
  if (!std::isfinite(fx)) throw DomainError("maximize: objective is not finite at the start point");
  Vector g = grad(x);
  if (!g.allFinite()) throw NumericError("maximize: gradient is not finite at the start point");

  const Eigen::Index p = x.size();
  Matrix hinv = Matrix::Identity(p, p) / std::max(1.0, g.norm());
  bool scaled = false;

  int it = 0;
  for (; it < options.max_iterations; ++it) {
    if (g.norm() <= tol) {
      res.converged = true;
      break;
    }
    Vector d = hinv * g;
    double slope = g.dot(d);
    if (!(slope > 0.0)) {
      hinv = Matrix::Identity(p, p) / std::max(1.0, g.norm());
      d = hinv * g;
      slope = g.dot(d);
    }

    double t = 1.0;
    Vector xn;
    double fn = -INFINITY;
    Vector gn;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      xn = x + t * d;
      fn = f(xn);
      if (std::isfinite(fn)) {
        if (fn >= fx + 1e-4 * t * slope) {
          accepted = true;
        } else if (fn >= fx - 1e-12 * (1.0 + std::abs(fx))) {
          // Objective differences are at rounding level: accept if the
          // gradient improves.
          gn = grad(xn);
          if (gn.allFinite() && gn.norm() < g.norm()) accepted = true;
        }
        if (accepted) break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    if (gn.size() == 0) gn = grad(xn);
    if (!gn.allFinite()) break;

    // BFGS on the minimization of -f.
    const Vector s = xn - x;
    const Vector y = g - gn;
    const double sy = s.dot(y);
    if (sy > 1e-300) {
      if (!scaled) {
        hinv = Matrix::Identity(p, p) * (sy / y.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Matrix ident = Matrix::Identity(p, p);
      hinv = (ident - rho * s * y.transpose()) * hinv * (ident - rho * y * s.transpose()) +
             rho * s * s.transpose();
    }
    x = xn;
    fx = fn;
    g = gn;
  }

  res.argmax = x;
  res.value = fx;
  res.gradient_norm = g.norm();
  res.iterations = it;
  if (!res.converged && res.gradient_norm <= tol) res.converged = true;
  return res;
}

}  // namespace plprep::num
