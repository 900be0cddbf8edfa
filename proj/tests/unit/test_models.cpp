#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <memory>

#include "plprep/error.hpp"
#include "plprep/models/data.hpp"
#include "plprep/models/mvn_model.hpp"
#include "plprep/models/probit_model.hpp"
#include "plprep/num/normal.hpp"
#include "plprep/num/optimize.hpp"

using namespace plprep;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x(i++) = d;
  return x;
}

// Bivariate normal log density, written out independently.
double bvn_logpdf(double x, double y, double mu, double s2, double r) {
  const double dx = x - mu, dy = y - mu;
  const double det = s2 * s2 * (1 - r * r);
  const double quad = (dx * dx - 2 * r * dx * dy + dy * dy) / (s2 * (1 - r * r));
  return -std::log(2 * M_PI) - 0.5 * std::log(det) - 0.5 * quad;
}

}  // namespace

TEST_CASE("mvn pairwise log-likelihood equals sum over pairs") {
  MvnCsModel m(4);
  num::RngStream rng(1, 0);
  const Vector theta = vec({0.3, 1.4, 0.4});
  const DataMatrix d = m.simulate(theta, 25, rng);
  CHECK(d.n() == 25);
  CHECK(d.q() == 4);
  for (const Vector& t : {theta, vec({-1.0, 0.7, -0.2}), vec({2.0, 3.0, 0.8})}) {
    double total = 0;
    for (std::size_t i = 0; i < d.n(); ++i)
      for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t h = j + 1; h < 4; ++h) total += bvn_logpdf(d.y(i, j), d.y(i, h), t(0), t(1), t(2));
    const double pairs = 25.0 * 6.0;
    // Both forms drop the constant -log(2 pi) per pair.
    CHECK(m.pairwise_loglik(t, d) - total == doctest::Approx(pairs * std::log(2 * M_PI)).epsilon(1e-10));
    CHECK(mvn_pairwise_loglik(MvnCsParams::from_vector(t, 4), d) - total == doctest::Approx(pairs * std::log(2 * M_PI)).epsilon(1e-10));
  }
}

TEST_CASE("mvn scores match central differences") {
  MvnCsModel m(3);
  num::RngStream rng(2, 0);
  const Vector theta = vec({0.0, 1.0, 0.5});
  const DataMatrix d = m.simulate(theta, 10, rng);
  for (std::size_t i = 0; i < d.n(); ++i) {
    const auto f = [&](const Vector& t) { return m.unit_loglik(t, d, i); };
    const Vector fd = num::central_difference_gradient(f, theta, 1e-6);
    CHECK((m.unit_score(theta, d, i) - fd).norm() <= 1e-6 * (1 + fd.norm()));
  }
}

TEST_CASE("mvn domain") {
  MvnCsModel m(5);
  CHECK(m.in_domain(vec({0, 1, -0.2})));
  CHECK_FALSE(m.in_domain(vec({0, 1, -0.3})));
  CHECK_FALSE(m.in_domain(vec({0, -1, 0.1})));
  CHECK_THROWS_AS(MvnCsParams(0, 1, 1.0, 5), DomainError);
}

TEST_CASE("mvn full likelihood ratio at the estimate is zero") {
  MvnCsModel m(4);
  num::RngStream rng(3, 0);
  const Vector theta = vec({0.0, 1.0, 0.5});
  const DataMatrix d = m.simulate(theta, 40, rng);
  const auto r = mvn_full_mle(d, theta);
  CHECK(r.converged);
  CHECK(mvn_w(r.argmax, r.argmax, d) == doctest::Approx(0.0));
  CHECK(mvn_w(theta, r.argmax, d) >= 0.0);
}

TEST_CASE("probit pair cells") {
  const auto c = pair_cells(0.3, -0.5, 0.4);
  CHECK(c.p11 + c.p10 + c.p01 + c.p00 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(c.p11 + c.p10 == doctest::Approx(num::std_normal_cdf(0.3)).epsilon(1e-12));
  CHECK(c.p11 + c.p01 == doctest::Approx(num::std_normal_cdf(-0.5)).epsilon(1e-12));
}

TEST_CASE("probit scores match central differences") {
  ProbitModel m(5, 2);
  num::RngStream rng(4, 0);
  const Vector theta = vec({0.5, 1.0, 0.25});
  const DataMatrix d = m.simulate(theta, 12, rng);
  CHECK(d.binary);
  CHECK(d.designs.size() == 12);
  for (std::size_t i = 0; i < d.n(); ++i) {
    const auto f = [&](const Vector& t) { return m.unit_loglik(t, d, i); };
    const Vector fd = num::central_difference_gradient(f, theta, 1e-6);
    CHECK((m.unit_score(theta, d, i) - fd).norm() <= 1e-6 * (1 + fd.norm()));
  }
  ProbitModel fdm(5, 2, true);
  CHECK((fdm.unit_score(theta, d, 0) - m.unit_score(theta, d, 0)).norm() < 1e-6);
}

TEST_CASE("fixed components model") {
  auto base = std::make_shared<MvnCsModel>(3);
  const Vector full = vec({0.7, 1.2, 0.3});
  FixedComponentsModel m(base, {1, 2}, full);
  CHECK(m.param_dim() == 2);
  CHECK(m.param_names() == std::vector<std::string>{"sigma2", "rho"});
  num::RngStream rng(5, 0);
  const DataMatrix d = base->simulate(full, 15, rng);
  const Vector t = vec({1.5, 0.1});
  CHECK(m.expand(t)(0) == 0.7);
  CHECK(m.pairwise_loglik(t, d) == doctest::Approx(base->pairwise_loglik(m.expand(t), d)));
  const Matrix s = m.score_matrix(t, d);
  const Matrix sb = base->score_matrix(m.expand(t), d);
  CHECK((s.col(0) - sb.col(1)).norm() < 1e-12);
  CHECK((s.col(1) - sb.col(2)).norm() < 1e-12);
}

TEST_CASE("csv round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "plprep_models_test";
  std::filesystem::create_directories(dir);
  ProbitModel m(3, 2);
  num::RngStream rng(6, 0);
  const DataMatrix d = m.simulate(vec({0.5, 1.0, 0.25}), 8, rng);
  save_csv(d, (dir / "y.csv").string(), (dir / "x.csv").string());
  const DataMatrix e = load_csv((dir / "y.csv").string(), (dir / "x.csv").string());
  CHECK(e.binary);
  CHECK((e.y - d.y).norm() == 0.0);
  for (std::size_t i = 0; i < d.n(); ++i) CHECK((e.designs[i] - d.designs[i]).norm() < 1e-12);
  DataMatrix bad;
  bad.y = Matrix::Zero(1, 3);
  CHECK_THROWS_AS(bad.validate(), DomainError);
  std::filesystem::remove_all(dir);
}
