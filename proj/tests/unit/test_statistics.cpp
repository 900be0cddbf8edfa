#include <doctest.h>

#include <cmath>
#include <memory>

#include "plprep/error.hpp"
#include "plprep/inference/godambe.hpp"
#include "plprep/inference/statistics.hpp"
#include "plprep/models/mvn_model.hpp"

using namespace plprep;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x(i++) = d;
  return x;
}

InfoPair pair(const Matrix& j, const Matrix& h) {
  InfoPair p;
  p.J = j;
  p.H = h;
  return p;
}

}  // namespace

TEST_CASE("names round trip") {
  for (auto k : {StatisticKind::PW, StatisticKind::PW_W, StatisticKind::PW_S, StatisticKind::PW_1, StatisticKind::PW_CB,
                 StatisticKind::PW_INV, StatisticKind::PW_US})
    CHECK(statistic_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(statistic_from_string("pw_x"), ParseError);
  CHECK(reference_for(StatisticKind::PW) == Reference::WeightedChiSquare);
  CHECK(reference_for(StatisticKind::PW_US) == Reference::Prepivot);
  CHECK(reference_for(StatisticKind::PW_S) == Reference::ChiSquare);
}

TEST_CASE("pw_us and pw") {
  Matrix s(3, 2);
  s << 1, 2, -3, 0, 1, 1;
  CHECK(pw_us(s) == doctest::Approx((1.0 + 9.0) / 3.0));
  CHECK(pw(-10.0, -12.5) == doctest::Approx(5.0));
  CHECK(pw(-10.0, -10.0 + 1e-9) == 0.0);
  CHECK_THROWS_AS(pw(-10.0, -9.0), NumericError);
}

TEST_CASE("Wald and score forms") {
  Matrix j(2, 2), h(2, 2);
  j << 2, 0.5, 0.5, 1;
  h << 3, 0.2, 0.2, 2;
  const InfoPair info = pair(j, h);
  const Vector t = vec({0, 0}), th = vec({0.1, -0.2});
  const Matrix v = h * j.inverse() * h;
  const Vector d = th - t;
  CHECK(*pw_w(t, th, info, 50) == doctest::Approx(50.0 * d.dot(v * d)));
  Matrix s(4, 2);
  s << 1, 0, -0.5, 1, 0.2, 0.3, 0.1, -0.4;
  const Vector ps = s.colwise().sum().transpose();
  CHECK(*pw_s(s, info) == doctest::Approx(ps.dot(j.inverse() * ps) / 4.0));
  const Vector lam = *pw_limit_weights(info);
  CHECK(*pw_1(3.0, info) == doctest::Approx(3.0 / lam.mean()));
  CHECK(*pw_cb(3.0, t, th, info) == doctest::Approx(3.0 * d.dot(v * d) / d.dot(h * d)));
  CHECK(*pw_cb(0.0, t, t, info) == 0.0);
  CHECK(*pw_inv(3.0, s, info) == doctest::Approx(3.0 * ps.dot(j.inverse() * ps) / ps.dot(h.inverse() * ps)));
  const InfoPair bad = pair(j, -h);
  CHECK_FALSE(pw_w(t, th, bad, 50));
  CHECK_FALSE(pw_1(3.0, bad));
  CHECK_FALSE(pw_limit_weights(bad));
  const InfoPair singular = pair(Matrix::Zero(2, 2), h);
  CHECK_FALSE(pw_s(s, singular));
}

TEST_CASE("information identity makes the adjustments vanish") {
  Matrix j(2, 2);
  j << 2, 0.3, 0.3, 1;
  const InfoPair info = pair(j, j);
  CHECK(*pw_1(4.2, info) == doctest::Approx(4.2));
  CHECK(*pw_cb(4.2, vec({0, 0}), vec({0.3, 0.1}), info) == doctest::Approx(4.2));
}

TEST_CASE("mple of the mvn mean is the grand mean") {
  MvnCsModel m(4);
  num::RngStream rng(12, 0);
  const Vector theta = vec({0.5, 2.0, 0.3});
  const DataMatrix d = m.simulate(theta, 60, rng);
  const MpleResult r = mple(m, d, m.start_point(d));
  CHECK(r.converged);
  CHECK(r.theta_hat(0) == doctest::Approx(d.y.mean()).epsilon(1e-6));
  CHECK(r.score_norm <= 1e-6 * (1 + r.theta_hat.norm()));
  CHECK(r.loglik >= m.pairwise_loglik(theta, d));
  // Local maximum: small perturbations decrease pl.
  for (int k = 0; k < 3; ++k) {
    Vector t = r.theta_hat;
    t(k) += 1e-3;
    CHECK(m.pairwise_loglik(t, d) < r.loglik);
  }
}
