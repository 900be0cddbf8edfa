// Bivariate normal orthant probabilities following Genz's BVNU (Drezner and
// Wesolowsky's method with Gauss-Legendre rules of 6, 12 and 20 points).

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "plprep/error.hpp"
#include "plprep/num/normal.hpp"

namespace plprep::num {
namespace {

struct HalfRule {
  std::vector<double> x;  // negative nodes of the full rule on [-1, 1]
  std::vector<double> w;
};

HalfRule legendre_half_rule(int n) {
  HalfRule rule;
  for (int i = 1; i <= n / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    rule.x.push_back(-z);
    rule.w.push_back(2.0 / ((1.0 - z * z) * dp * dp));
  }
  return rule;
}

const std::array<HalfRule, 3>& rules() {
  static const std::array<HalfRule, 3> r = {legendre_half_rule(6), legendre_half_rule(12),
                                            legendre_half_rule(20)};
  return r;
}

// P(X > dh, Y > dk).
double bvnu(double dh, double dk, double r) {
  constexpr double twopi = 2.0 * std::numbers::pi;
  if (std::isinf(dh) || std::isinf(dk)) {
    if (dh == INFINITY || dk == INFINITY) return 0.0;
    if (dh == -INFINITY) return dk == -INFINITY ? 1.0 : std_normal_cdf(-dk);
    return std_normal_cdf(-dh);
  }
  if (r == 0.0) return std_normal_cdf(-dh) * std_normal_cdf(-dk);

  const HalfRule& rule = std::abs(r) < 0.3 ? rules()[0] : std::abs(r) < 0.75 ? rules()[1] : rules()[2];
  double h = dh, k = dk, hk = h * k;
  double bvn = 0.0;

  if (std::abs(r) < 0.925) {
    const double hs = (h * h + k * k) / 2.0;
    const double asr = std::asin(r);
    for (std::size_t i = 0; i < rule.x.size(); ++i) {
      double sn = std::sin(asr * (rule.x[i] + 1.0) / 2.0);
      bvn += rule.w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      sn = std::sin(asr * (-rule.x[i] + 1.0) / 2.0);
      bvn += rule.w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
    }
    return bvn * asr / (2.0 * twopi) + std_normal_cdf(-h) * std_normal_cdf(-k);
  }

  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  if (std::abs(r) < 1.0) {
    const double as = (1.0 - r) * (1.0 + r);
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    const double c = (4.0 - hk) / 8.0;
    const double d = (12.0 - hk) / 16.0;
    bvn = a * std::exp(-(bs / as + hk) / 2.0) *
          (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
    if (hk > -160.0) {
      const double b = std::sqrt(bs);
      bvn -= std::exp(-hk / 2.0) * std::sqrt(twopi) * std_normal_cdf(-b / a) * b *
             (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    a /= 2.0;
    for (std::size_t i = 0; i < rule.x.size(); ++i) {
      for (int is = -1; is <= 1; is += 2) {
        const double xs = std::pow(a * (is * rule.x[i] + 1.0), 2);
        const double rs = std::sqrt(1.0 - xs);
        const double asr = -(bs / xs + hk) / 2.0;
        if (asr > -100.0) {
          bvn += a * rule.w[i] * std::exp(asr) *
                 (std::exp(-hk * xs / (2.0 * (1.0 + rs) * (1.0 + rs))) / rs -
                  (1.0 + c * xs * (1.0 + d * xs)));
        }
      }
    }
    bvn = -bvn / twopi;
  }
  if (r > 0.0) return bvn + std_normal_cdf(-std::max(h, k));
  bvn = -bvn;
  if (k > h) {
    if (h < 0.0)
      bvn += std_normal_cdf(k) - std_normal_cdf(h);
    else
      bvn += std_normal_cdf(-h) - std_normal_cdf(-k);
  }
  return bvn;
}

}  // namespace

double bvn_cdf(double h, double k, double rho) {
  if (!(std::abs(rho) < 1.0)) throw DomainError("bvn_cdf: |rho| must be < 1");
  if (std::isnan(h) || std::isnan(k)) throw DomainError("bvn_cdf: NaN argument");
  return std::clamp(bvnu(-h, -k, rho), 0.0, 1.0);
}

}  // namespace plprep::num
