#pragma once

#include <optional>
#include <string>
#include <vector>

#include "plprep/models/model.hpp"
#include "plprep/num/rng.hpp"

namespace plprep {

enum class HullPolicy { RejectPoint, Error };

std::string to_string(HullPolicy p);
HullPolicy hull_policy_from_string(const std::string& s);

struct PrepivotConfig {
  std::size_t B = 1000;  // outer replicates
  std::size_t M = 1000;  // inner replicates per outer replicate
  double alpha = 0.05;
  num::RngStream rng;
  HullPolicy hull_policy = HullPolicy::RejectPoint;

  // floor(alpha (B + 1)): number of largest outer replicates calibrated in full.
  std::size_t top_count() const { return top_count_for(alpha); }
  std::size_t top_count_for(double a) const;
  // Throws DomainError unless B, M >= 1, alpha in (0, 1) and 1 <= top_count() <= B.
  void validate() const;
};

struct PrepivotDiagnostics {
  std::size_t inner_loops_started = 0;
  std::size_t inner_loops_early_stopped = 0;
  std::size_t threshold_replacements = 0;
  std::size_t hull_failures = 0;  // inner reweightings that were infeasible or did not converge
  std::size_t inner_replicates = 0;
};

struct PrepivotResult {
  double alpha = 0.0;
  std::size_t B = 0;
  std::size_t M = 0;
  double statistic = 0.0;           // observed pW_us
  std::vector<double> outer_values;  // in replicate order
  double delta_threshold = 0.0;     // largest-floor(alpha(B+1))-th inner calibration level
  double critical_value = 0.0;      // -inf when delta_threshold == 0
  bool reject = false;
  double pvalue_outer = 0.0;  // #{outer >= statistic} / B
  bool outer_hull_failure = false;  // set only under HullPolicy::RejectPoint
  PrepivotDiagnostics diagnostics;
};

// Double bootstrap calibration of pW_us at the null value the score rows were
// evaluated at. Inner loops beyond the top floor(alpha(B+1)) outer replicates
// are cut short by a stopping rule that cannot change the threshold.
PrepivotResult prepivot_test(const Matrix& scores, const PrepivotConfig& cfg);

// Same outer and inner draws for several levels at once; entry k equals
// prepivot_test with cfg.alpha = alphas[k].
std::vector<PrepivotResult> prepivot_test_levels(const Matrix& scores, const PrepivotConfig& cfg,
                                                 const std::vector<double>& alphas);

// Runs every inner loop to completion. Testing oracle for the stopping rule.
PrepivotResult fullblown_reference(const Matrix& scores, const PrepivotConfig& cfg);

// Index multiset of outer replicate b, re-derived from the configuration.
std::vector<std::size_t> outer_index_set(const Matrix& scores, const PrepivotConfig& cfg, std::size_t b);

// pW_us of the rows of `scores` selected by `indices`.
double resampled_pw_us(const Matrix& scores, const std::vector<std::size_t>& indices);

// Inverse of the empirical distribution function of `values` at `level`:
// the ceil(level * size)-th smallest value, -inf for level 0.
double empirical_quantile(std::vector<double> values, double level);

struct ConfidencePoint {
  Vector theta;
  double statistic = 0.0;
  std::vector<bool> member;  // per alpha
  std::vector<PrepivotResult> results;
  bool hull_failure = false;
};

// One full calibration per grid point, scores recomputed at that point; the
// calibration stream of point g is cfg.rng.substream(g).
std::vector<ConfidencePoint> prepivot_confidence_scan(const PairwiseModel& model, const DataMatrix& data,
                                                      const std::vector<Vector>& grid, const PrepivotConfig& cfg,
                                                      const std::vector<double>& alphas);

// Outer values are written only when B <= outer_value_cap.
std::string to_json(const PrepivotResult& r, std::size_t outer_value_cap = 10000);
std::string to_csv(const PrepivotResult& r, std::size_t outer_value_cap = 10000);

}  // namespace plprep
