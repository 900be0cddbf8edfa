#pragma once

#include <optional>
#include <string>

#include "plprep/inference/godambe.hpp"
#include "plprep/num/optimize.hpp"

namespace plprep {

enum class StatisticKind { PW, PW_W, PW_S, PW_1, PW_CB, PW_INV, PW_US };

std::string to_string(StatisticKind k);
StatisticKind statistic_from_string(const std::string& s);

// Which reference distribution a statistic is compared against.
enum class Reference { ChiSquare, WeightedChiSquare, Prepivot };
Reference reference_for(StatisticKind k);

struct MpleResult {
  Vector theta_hat;
  double loglik = 0.0;
  double score_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Root of the pairwise score equation: quasi-Newton ascent on the pairwise
// log-likelihood with the analytic score as gradient, polished by Newton
// steps on the score. Converged means |score| <= 1e-6 (1 + |theta_hat|).
MpleResult mple(const PairwiseModel& model, const DataMatrix& data, const Vector& start);

// n^{-1} |sum_i s_i|^2.
double pw_us(const Matrix& scores);

// 2 [pl(theta_hat) - pl(theta)]; negatives above -1e-8 (relative) are clipped
// to zero, larger ones raise NumericError.
double pw(double loglik_at_hat, double loglik_at_theta);

// The statistics below return nullopt ("undefined") when a matrix they need
// to invert is not positive definite or a denominator vanishes.

// n (theta_hat - theta)^T V^{-1} (theta_hat - theta).
std::optional<double> pw_w(const Vector& theta, const Vector& theta_hat, const InfoPair& info, std::size_t n);
// n^{-1} ps^T J^{-1} ps with ps the total score.
std::optional<double> pw_s(const Matrix& scores, const InfoPair& info);
// pW / kappa_1, kappa_1 the mean eigenvalue of H^{-1} J.
std::optional<double> pw_1(double pw_value, const InfoPair& info);
std::optional<double> pw_cb(double pw_value, const Vector& theta, const Vector& theta_hat, const InfoPair& info);
std::optional<double> pw_inv(double pw_value, const Matrix& scores, const InfoPair& info);

// Eigenvalues of H^{-1} J (the limit law of pW); nullopt if H is not PD.
std::optional<Vector> pw_limit_weights(const InfoPair& info);

}  // namespace plprep
