#pragma once

#include <optional>
#include <string>

#include "plprep/models/model.hpp"

namespace plprep {

enum class InfoProvenance { McTrue, HatAtTheta, HatAtThetaHat };

std::string to_string(InfoProvenance p);
InfoProvenance provenance_from_string(const std::string& s);

// Per-unit variability (J) and sensitivity (H) matrices.
struct InfoPair {
  Matrix J;
  Matrix H;
  InfoProvenance provenance = InfoProvenance::HatAtTheta;

  // Monte Carlo standard errors (elementwise), set for McTrue only.
  Matrix J_se;
  Matrix H_se;
  std::size_t n_mc = 0;
  std::uint64_t seed = 0;

  bool h_positive_definite() const;
  // V = H^{-1} J H^{-1}; nullopt when H is singular or not positive definite.
  std::optional<Matrix> godambe_inverse_variance() const;
};

// n^{-1} sum_i s_i s_i^T.
Matrix j_hat(const Matrix& scores);

// Symmetrized negative central-difference Jacobian of the mean score;
// step h_k = 1e-5 (1 + |theta_k|). Throws NumericError if the difference
// stencil leaves the parameter space or the result is not finite.
Matrix h_hat(const PairwiseModel& model, const Vector& theta, const DataMatrix& data);

// Empirical pair at theta (HatAtTheta) or at the estimate (HatAtThetaHat).
InfoPair hat_info(const PairwiseModel& model, const Vector& theta, const DataMatrix& data, InfoProvenance provenance);

// Monte Carlo estimate of the expected J and H at theta over n_mc simulated
// units (n_mc >= 10^4), with elementwise standard errors.
InfoPair mc_true_info(const PairwiseModel& model, const Vector& theta, std::size_t n_mc, const num::RngStream& rng);

inline constexpr std::size_t kDefaultMcUnits = 200000;

// Cache file for mc-true pairs, keyed by model name, theta, n_mc and seed.
std::string info_cache_key(const std::string& model_name, const Vector& theta, std::size_t n_mc, std::uint64_t seed);
void save_info_csv(const InfoPair& info, const std::string& model_name, const Vector& theta, const std::string& path);
// Returns nullopt if the file is absent or keyed differently.
std::optional<InfoPair> load_info_csv(const std::string& path, const std::string& model_name, const Vector& theta,
                                      std::size_t n_mc, std::uint64_t seed);

}  // namespace plprep
