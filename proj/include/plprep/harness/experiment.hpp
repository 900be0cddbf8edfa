#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "plprep/inference/godambe.hpp"
#include "plprep/inference/prepivot.hpp"
#include "plprep/inference/statistics.hpp"

namespace plprep {

// A statistic as it appears in a results table: the full likelihood ratio w
// (normal model only) or a pairwise statistic with its information source.
struct StatisticId {
  bool full_lr = false;
  StatisticKind kind = StatisticKind::PW_US;
  std::optional<InfoProvenance> provenance;  // empty for pw_us and w

  // "w", "pw_us", or "<kind>:<true|n|e>" (a bare kind means true).
  static StatisticId parse(const std::string& s);
  std::string label() const;
  std::string provenance_label() const;  // "none", "mc-true", ...
  bool needs_estimate() const;
  bool operator==(const StatisticId&) const = default;
};

struct ModelSpec {
  std::string type = "mvn";  // mvn | probit
  std::size_t q = 10;
  std::size_t n_beta = 2;
  Vector theta;  // data-generating value, full parameter

  ModelPtr make() const;
};

struct GridAxis {
  double min = 0.0;
  double max = 1.0;
  std::size_t count = 10;
  double at(std::size_t i) const;
};

// Grid over the free components; the remaining components stay at the truth.
struct GridSpec {
  std::vector<std::size_t> free;
  std::vector<GridAxis> axes;
  std::size_t size() const;
  // Point g, row-major with the last axis fastest.
  Vector point(std::size_t g) const;
};

struct InfoSpec {
  std::size_t n_mc = kDefaultMcUnits;
  std::uint64_t seed = 20240101;
  std::string cache_dir;  // empty: no disk cache
};

struct ExperimentSpec {
  std::string study = "rejection";  // rejection | coverage
  ModelSpec model;
  std::size_t n = 20;
  std::vector<StatisticId> statistics;
  std::vector<double> alphas{0.1, 0.05, 0.01};
  std::size_t trials = 1000;
  std::size_t B = 1000;
  std::size_t M = 1000;
  std::uint64_t seed = 1;
  InfoSpec info;
  std::optional<GridSpec> grid;
  HullPolicy hull_policy = HullPolicy::RejectPoint;
  std::size_t threads = 1;
  std::string out_dir = "out";

  // Throws DomainError / ParseError describing the first violated invariant.
  void validate() const;
};

ExperimentSpec parse_spec_json(const std::string& text);
ExperimentSpec load_spec(const std::string& path);
std::string spec_to_json(const ExperimentSpec& spec);

// 6 significant digits, used for every numeric output.
std::string format6(double v);

}  // namespace plprep
