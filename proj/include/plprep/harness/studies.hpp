#pragma once

#include <string>
#include <vector>

#include "plprep/harness/experiment.hpp"

namespace plprep {

struct ResultRow {
  StatisticId statistic;
  std::size_t point = 0;  // grid index (0 for rejection studies)
  Vector theta;           // evaluated parameter (free components only in coverage studies)
  double alpha = 0.0;
  std::size_t hits = 0;  // rejections, or coverages for coverage studies
  std::size_t trials = 0;
  std::size_t undefined = 0;  // trials where the statistic could not be evaluated

  double estimate() const { return static_cast<double>(hits) / static_cast<double>(trials); }
  // Binomial standard error sqrt(p (1 - p) / trials).
  double se() const;
};

struct StatisticDiagnostics {
  std::size_t undefined = 0;  // over all trials and grid points
  // Prepivot totals, summed over trials, grid points and levels.
  PrepivotDiagnostics prepivot;
  std::size_t outer_hull_failures = 0;
  std::size_t calibrations = 0;  // prepivot runs, one per trial, point and level
};

struct InfoSummary {
  std::size_t point = 0;
  InfoPair info;
};

struct StudyDiagnostics {
  std::size_t trials = 0;
  std::size_t grid_points = 0;
  std::size_t mple_failures = 0;
  std::size_t full_mle_failures = 0;
  std::vector<StatisticDiagnostics> per_statistic;  // parallel to spec.statistics
  std::vector<InfoSummary> mc_true;                 // mc-true pairs used, per grid point
};

struct ResultTable {
  std::string kind;  // rejection | coverage | confset
  std::vector<std::string> param_names;  // names of the grid coordinates
  std::vector<ResultRow> rows;
  StudyDiagnostics diagnostics;

  const ResultRow& find(const std::string& statistic_label, double alpha, std::size_t point = 0) const;
};

// Per trial t: data from stream (seed, 0).substream(t).substream(0); the
// prepivot calibration at grid point g uses ...substream(t).substream(1 + g).
// Deterministic for any thread count.
ResultTable run_rejection_study(const ExperimentSpec& spec);
ResultTable run_coverage_study(const ExperimentSpec& spec);

// Every statistic of the spec evaluated on one data set at each grid point;
// rows hold membership (hits 0 or 1, trials 1). Kind "confset". The spec's
// n and trials are ignored; the mple starts at the model's start point.
ResultTable run_confidence_scan(const ExperimentSpec& spec, const DataMatrix& data);

// mc-true pair at a full parameter value, read from / written to
// spec.info.cache_dir when set.
InfoPair cached_mc_true_info(const ExperimentSpec& spec, const Vector& full_theta);

std::string rejection_csv(const ResultTable& table);
std::string coverage_csv(const ResultTable& table);
std::string diagnostics_json(const ExperimentSpec& spec, const ResultTable& table);

// Writes rejection.csv or coverage_grid.csv (+ one contour_<stat>.svg per
// statistic for two-axis grids) and diagnostics.json into spec.out_dir.
void write_study_outputs(const ExperimentSpec& spec, const ResultTable& table);

}  // namespace plprep
