#pragma once

#include "plprep/num/linalg.hpp"

namespace plprep {

// Null-constrained resampling probabilities p_i = 1 / (n (1 + xi^T s_i)),
// with sum_i p_i s_i = 0. These minimize the Kullback-Leibler divergence
// from the uniform weights subject to the constraint (Owen's empirical
// likelihood tilt).
struct ResampleWeights {
  Vector weights;
  Vector xi;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;  // max_k |sum_i p_i s_ik|
};

enum class WeightsStatus { Ok, HullViolation, IterationLimit };

struct WeightsOutcome {
  WeightsStatus status = WeightsStatus::Ok;
  ResampleWeights result;
};

inline constexpr int kWeightsMaxIterations = 100;

// Damped Newton on the dual with Owen's pseudo-logarithm. Does not throw for
// hull violations; classifies them instead.
WeightsOutcome try_solve_weights(const Matrix& scores);

// Throws HullError when zero is not interior to the convex hull of the rows.
// Iteration-limit failures return with converged == false.
ResampleWeights solve_weights(const Matrix& scores);

// True iff a strictly positive combination of the rows equals zero.
bool hull_check(const Matrix& scores);

}  // namespace plprep
