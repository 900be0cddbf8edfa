#include "plprep/num/imhof.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "plprep/error.hpp"

namespace plprep::num {
namespace {

constexpr double kTruncationTarget = 1e-8;
constexpr double kSegmentTol = 1e-13;

class ImhofIntegrand {
 public:
  ImhofIntegrand(const std::vector<double>& lambdas, double x) : lambdas_(lambdas), x_(x) {}

  double operator()(double u) const {
    if (u == 0.0) {
      double s = 0.0;
      for (double l : lambdas_) s += l;
      return 0.5 * (s - x_);
    }
    double theta = -0.5 * x_ * u;
    double log_rho = 0.0;
    for (double l : lambdas_) {
      theta += 0.5 * std::atan(l * u);
      log_rho += 0.25 * std::log1p(l * l * u * u);
    }
    return std::sin(theta) / (u * std::exp(log_rho));
  }

 private:
  const std::vector<double>& lambdas_;
  double x_;
};

// Bound on |integral over (U, inf)| / pi for the central case.
double truncation_bound(const std::vector<double>& lambdas, double u) {
  double k = 0.0, log_prod = 0.0;
  for (double l : lambdas) {
    if (l > 0.0) {
      k += 1.0;
      log_prod += 0.5 * std::log(l);
    }
  }
  return 2.0 / (std::numbers::pi * k * std::exp(0.5 * k * std::log(u) + log_prod));
}

double limit_for_bound(const std::vector<double>& lambdas, double target) {
  double k = 0.0, log_prod = 0.0;
  for (double l : lambdas) {
    if (l > 0.0) {
      k += 1.0;
      log_prod += 0.5 * std::log(l);
    }
  }
  // 2 / (pi k U^{k/2} prod sqrt(l)) = target
  const double log_u = 2.0 / k * (std::log(2.0 / (std::numbers::pi * k * target)) - log_prod);
  return std::exp(log_u);
}

double integrate_piece(const ImhofIntegrand& f, double a, double b, int depth, double* err) {
  double e = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &e);
  // Absolute tolerance: pieces far out in the tail are tiny, and a relative
  // test would refine them to the depth limit.
  if (e <= kSegmentTol || depth == 0) {
    if (err) *err += e;
    return v;
  }
  const double m = 0.5 * (a + b);
  return integrate_piece(f, a, m, depth - 1, err) + integrate_piece(f, m, b, depth - 1, err);
}

double integrate(const ImhofIntegrand& f, double a, double b, double* err) { return integrate_piece(f, a, b, 12, err); }

// Wynn's epsilon algorithm applied to the whole partial-sum sequence.
double wynn_epsilon(const std::vector<double>& s, double* change) {
  const std::size_t n = s.size();
  std::vector<double> prev(n + 1, 0.0), cur(s.begin(), s.end());
  double best = s.back();
  double best_prev = n > 1 ? s[n - 2] : s.back();
  for (std::size_t k = 1; k < n; ++k) {
    std::vector<double> next(cur.size() - 1);
    bool ok = true;
    for (std::size_t i = 0; i + 1 < cur.size(); ++i) {
      const double diff = cur[i + 1] - cur[i];
      if (diff == 0.0) {
        ok = false;
        break;
      }
      next[i] = prev[i + 1] + 1.0 / diff;
    }
    if (!ok) break;
    prev = cur;
    cur = next;
    if (k % 2 == 0 && cur.size() >= 2) {
      best = cur.back();
      best_prev = cur[cur.size() - 2];
    }
  }
  if (change) *change = std::abs(best - best_prev);
  return best;
}

}  // namespace

WeightedChiSq::WeightedChiSq(std::span<const double> lambdas) {
  double max_abs = 0.0;
  for (double l : lambdas) {
    if (!std::isfinite(l)) throw DomainError("WeightedChiSq: non-finite weight");
    max_abs = std::max(max_abs, std::abs(l));
  }
  if (max_abs == 0.0) throw DomainError("WeightedChiSq: needs at least one positive weight");
  for (double l : lambdas) {
    if (l < -1e-8 * max_abs) throw DomainError("WeightedChiSq: negative weight");
    lambdas_.push_back(std::abs(l) < 1e-10 * max_abs || l < 0.0 ? 0.0 : l);
  }
  if (positive_count() == 0) throw DomainError("WeightedChiSq: needs at least one positive weight");
}

std::size_t WeightedChiSq::positive_count() const {
  return static_cast<std::size_t>(std::count_if(lambdas_.begin(), lambdas_.end(), [](double l) { return l > 0.0; }));
}

double WeightedChiSq::mean() const {
  double s = 0.0;
  for (double l : lambdas_) s += l;
  return s;
}

double WeightedChiSq::variance() const {
  double s = 0.0;
  for (double l : lambdas_) s += 2.0 * l * l;
  return s;
}

double imhof_cdf(double x, const WeightedChiSq& law, ImhofDiagnostics* diag) {
  if (std::isnan(x)) throw DomainError("imhof_cdf: NaN argument");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;

  std::vector<double> lambdas;
  for (double l : law.lambdas())
    if (l > 0.0) lambdas.push_back(l);
  const ImhofIntegrand f(lambdas, x);

  const double period = 2.0 * std::numbers::pi / x;  // sin(theta) changes sign every period
  const double u_trunc = limit_for_bound(lambdas, kTruncationTarget);
  const double min_l = *std::min_element(lambdas.begin(), lambdas.end());

  ImhofDiagnostics d;
  double err = 0.0;
  double integral = 0.0;

  // Head: enough half-waves to be in the asymptotic regime.
  const double u_head = std::min({u_trunc, 40.0 * period + 10.0 / min_l, 20000.0 * period});
  const int head_pieces = std::max(1, static_cast<int>(std::ceil(u_head / period)));
  for (int i = 0; i < head_pieces; ++i) {
    const double a = u_head * i / head_pieces;
    const double b = u_head * (i + 1) / head_pieces;
    integral += integrate(f, a, b, &err);
  }
  d.upper_limit = u_head;

  if (u_head < u_trunc) {
    // Tail: half-period segments form a nearly alternating series.
    std::vector<double> partial;
    double sum = integral;
    double u = u_head;
    double estimate = sum;
    bool converged = false;
    double last_change = INFINITY;
    for (int seg = 0; seg < 400; ++seg) {
      const double b = u + period;
      sum += integrate(f, u, b, &err);
      u = b;
      partial.push_back(sum);
      if (u >= u_trunc) {
        estimate = sum;
        converged = true;
        break;
      }
      if (partial.size() >= 12 && partial.size() % 2 == 0) {
        double change = 0.0;
        const double e = wynn_epsilon(partial, &change);
        if (std::abs(e - estimate) < 1e-13 && change < 1e-12) {
          estimate = e;
          converged = true;
          d.extrapolated = true;
          last_change = change;
          break;
        }
        estimate = e;
        last_change = change;
      }
    }
    d.tail_segments = static_cast<int>(partial.size());
    d.upper_limit = u;
    if (!converged) {
      std::ostringstream os;
      os << "imhof_cdf: tail extrapolation did not converge (x=" << x << ", segments="
         << partial.size() << ", last change=" << last_change << ")";
      throw NumericError(os.str());
    }
    integral = estimate;
    if (d.extrapolated) err += last_change;
  }

  d.truncation_bound = d.extrapolated ? 0.0 : truncation_bound(lambdas, d.upper_limit);
  d.error_estimate = err / std::numbers::pi;
  if (diag) *diag = d;
  return std::clamp(0.5 - integral / std::numbers::pi, 0.0, 1.0);
}

double imhof_quantile(double p, const WeightedChiSq& law) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("imhof_quantile: p must lie in (0,1)");
  double lo = 0.0;
  double hi = law.mean() + 6.0 * std::sqrt(law.variance());
  int expand = 0;
  while (imhof_cdf(hi, law) < p) {
    lo = hi;
    hi *= 2.0;
    if (++expand > 60) throw NumericError("imhof_quantile: failed to bracket");
  }
  while (hi - lo > 1e-10 * (1.0 + hi)) {
    const double mid = 0.5 * (lo + hi);
    if (imhof_cdf(mid, law) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace plprep::num
