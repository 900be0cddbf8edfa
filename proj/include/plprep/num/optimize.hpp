#pragma once

#include <functional>

#include "plprep/num/linalg.hpp"

namespace plprep::num {

using Objective = std::function<double(const Vector&)>;
using Gradient = std::function<Vector(const Vector&)>;

struct MaximizeOptions {
  int max_iterations = 500;
  // Relative central-difference step: h_k = step * (1 + |x_k|).
  double fd_step = 1e-6;
};

struct MaximizeResult {
  Vector argmax;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

Vector central_difference_gradient(const Objective& f, const Vector& x, double rel_step);

// Quasi-Newton (BFGS) ascent with backtracking. The objective may return
// -inf or NaN outside its domain; such trial points are rejected by the line
// search. When no gradient is supplied, central differences are used.
// Non-convergence is reported through the flag with the best iterate.
MaximizeResult maximize(const Objective& f, const Vector& start, double tol,
                        const Gradient& gradient = {}, const MaximizeOptions& options = {});

}  // namespace plprep::num
