#include <doctest.h>

#include <cmath>

#include "plprep/error.hpp"
#include "plprep/inference/el_weights.hpp"
#include "plprep/num/rng.hpp"

using namespace plprep;

TEST_CASE("two point example") {
  Matrix s(2, 1);
  s << -1, 2;
  const ResampleWeights w = solve_weights(s);
  CHECK(w.converged);
  CHECK(w.xi(0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(w.weights(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(w.weights(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("already centred scores give uniform weights") {
  Matrix s(4, 2);
  s << 1, 0, -1, 0, 0, 1, 0, -1;
  const ResampleWeights w = solve_weights(s);
  for (int i = 0; i < 4; ++i) CHECK(w.weights(i) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("random instances satisfy the constraints") {
  num::RngStream rng(21, 0);
  int solved = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const int n = 10 + static_cast<int>(rng.index(40)), p = 1 + static_cast<int>(rng.index(3));
    Matrix s(n, p);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < p; ++k) s(i, k) = rng.normal() + 0.3;
    const auto out = try_solve_weights(s);
    if (out.status != WeightsStatus::Ok) {
      CHECK_FALSE(hull_check(s));
      continue;
    }
    ++solved;
    const Vector& w = out.result.weights;
    CHECK(std::abs(w.sum() - 1.0) <= 1e-12);
    CHECK((w.transpose() * s).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(w.minCoeff() > 0.0);
    // Dual form of the weights.
    for (int i = 0; i < n; ++i) CHECK(w(i) == doctest::Approx(1.0 / (n * (1.0 + out.result.xi.dot(s.row(i).transpose())))).epsilon(1e-9));
  }
  CHECK(solved > 150);
}

TEST_CASE("hull violations") {
  Matrix s(3, 1);
  s << 1, 2, 3;
  CHECK_FALSE(hull_check(s));
  CHECK(try_solve_weights(s).status == WeightsStatus::HullViolation);
  CHECK_THROWS_AS(solve_weights(s), HullError);
  Matrix t(3, 2);
  t << 1, 0, -1, 0, 0, 1;  // zero on the boundary only
  CHECK_FALSE(hull_check(t));
  CHECK(try_solve_weights(t).status != WeightsStatus::Ok);
  Matrix u(3, 1);
  u << -1, 0.5, 2;
  CHECK(hull_check(u));
}
