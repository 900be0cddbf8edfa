#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "plprep/error.hpp"
#include "plprep/inference/prepivot.hpp"
#include "plprep/inference/statistics.hpp"
#include "plprep/models/mvn_model.hpp"

using namespace plprep;

namespace {

Matrix random_scores(std::uint64_t seed, int n, int p, double shift = 0.0) {
  num::RngStream rng(seed, 0);
  Matrix s(n, p);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < p; ++k) s(i, k) = rng.normal() + shift;
  return s;
}

PrepivotConfig config(std::size_t b, std::size_t m, double alpha, std::uint64_t seed) {
  PrepivotConfig c;
  c.B = b;
  c.M = m;
  c.alpha = alpha;
  c.rng = num::RngStream(seed, 0);
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  auto c = config(19, 10, 0.05, 1);
  CHECK(c.top_count() == 1);
  CHECK_NOTHROW(c.validate());
  c.B = 10;  // floor(0.05 * 11) = 0
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = config(199, 100, 0.05, 1);
  CHECK(c.top_count() == 10);
  CHECK(c.top_count_for(0.01) == 2);
  c.alpha = 1.0;
  CHECK_THROWS_AS(c.validate(), DomainError);
  CHECK(hull_policy_from_string(to_string(HullPolicy::Error)) == HullPolicy::Error);
  CHECK_THROWS(hull_policy_from_string("ignore"));
}

TEST_CASE("empirical quantile") {
  const std::vector<double> v = {5, 1, 4, 2, 3};
  CHECK(empirical_quantile(v, 0.0) == -std::numeric_limits<double>::infinity());
  CHECK(empirical_quantile(v, 0.2) == 1.0);
  CHECK(empirical_quantile(v, 0.21) == 2.0);
  CHECK(empirical_quantile(v, 1.0) == 5.0);
}

TEST_CASE("outer values are reproducible from their index sets") {
  const Matrix s = random_scores(3, 15, 2, 0.2);
  const auto c = config(39, 30, 0.05, 5);
  const PrepivotResult r = prepivot_test(s, c);
  REQUIRE(r.outer_values.size() == 39);
  CHECK(r.statistic == doctest::Approx(pw_us(s)));
  for (std::size_t b : {0u, 7u, 38u}) {
    const auto idx = outer_index_set(s, c, b);
    CHECK(idx.size() == 15);
    CHECK(resampled_pw_us(s, idx) == r.outer_values[b]);
  }
  std::size_t ge = 0;
  for (double v : r.outer_values) ge += v >= r.statistic;
  CHECK(r.pvalue_outer == doctest::Approx(ge / 39.0));
  CHECK(r.reject == (r.statistic >= r.critical_value));
}

TEST_CASE("stopping rule agrees with full calibration") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const Matrix s = random_scores(seed, 12 + seed, 1 + seed % 3, 0.1 * (seed % 4));
    for (double a : {0.1, 0.05}) {
      const auto c = config(99, 60, a, seed * 31);
      const PrepivotResult fast = prepivot_test(s, c);
      const PrepivotResult full = fullblown_reference(s, c);
      INFO("seed=" << seed << " alpha=" << a);
      CHECK(fast.delta_threshold == full.delta_threshold);
      CHECK(fast.critical_value == full.critical_value);
      CHECK(fast.reject == full.reject);
      CHECK(fast.diagnostics.inner_replicates <= full.diagnostics.inner_replicates);
    }
  }
}

TEST_CASE("multi-level run equals single-level runs") {
  const Matrix s = random_scores(17, 20, 2, 0.15);
  const auto c = config(99, 80, 0.05, 4);
  const std::vector<double> alphas = {0.1, 0.05, 0.02};
  const auto all = prepivot_test_levels(s, c, alphas);
  REQUIRE(all.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    auto ck = c;
    ck.alpha = alphas[k];
    const auto one = prepivot_test(s, ck);
    CHECK(all[k].critical_value == one.critical_value);
    CHECK(all[k].delta_threshold == one.delta_threshold);
    CHECK(all[k].reject == one.reject);
    CHECK(all[k].alpha == alphas[k]);
  }
}

TEST_CASE("outer hull failure follows the policy") {
  Matrix s(6, 1);
  s << 1, 2, 3, 1, 2, 3;
  auto c = config(39, 20, 0.05, 1);
  const auto r = prepivot_test(s, c);
  CHECK(r.outer_hull_failure);
  CHECK(r.reject);
  CHECK(std::isnan(r.critical_value));
  c.hull_policy = HullPolicy::Error;
  CHECK_THROWS_AS(prepivot_test(s, c), HullError);
}

TEST_CASE("serialization") {
  const Matrix s = random_scores(9, 10, 1);
  const auto r = prepivot_test(s, config(19, 10, 0.1, 2));
  const auto j = nlohmann::json::parse(to_json(r));
  CHECK(j.at("B").get<int>() == 19);
  CHECK(j.at("outer_values").size() == 19);
  CHECK(nlohmann::json::parse(to_json(r, 5)).at("outer_values").is_null());
  CHECK(to_csv(r).find("statistic") != std::string::npos);
}

TEST_CASE("confidence scan") {
  MvnCsModel m(3);
  num::RngStream rng(4, 0);
  Vector theta(3);
  theta << 0, 1, 0.3;
  const DataMatrix d = m.simulate(theta, 25, rng);
  std::vector<Vector> grid = {theta, Vector(theta)};
  grid[1](0) = 3.0;
  const auto pts = prepivot_confidence_scan(m, d, grid, config(39, 20, 0.1, 3), {0.1});
  REQUIRE(pts.size() == 2);
  CHECK(pts[1].statistic > pts[0].statistic);
  CHECK_FALSE(pts[1].member[0]);
  CHECK(pts[0].member[0] == !pts[0].results[0].reject);
}
