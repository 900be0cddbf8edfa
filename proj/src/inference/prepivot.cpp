#include "plprep/inference/prepivot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>

#include <json.hpp>

#include "plprep/error.hpp"
#include "plprep/inference/el_weights.hpp"
#include "plprep/inference/statistics.hpp"

namespace plprep {

std::string to_string(HullPolicy p) { return p == HullPolicy::RejectPoint ? "reject-point" : "error"; }

HullPolicy hull_policy_from_string(const std::string& s) {
  if (s == "reject-point") return HullPolicy::RejectPoint;
  if (s == "error") return HullPolicy::Error;
  throw ParseError("unknown hull policy '" + s + "' (expected reject-point or error)");
}

std::size_t PrepivotConfig::top_count_for(double a) const {
  // The small slack keeps e.g. 0.05 * 1000 + 0.05 from rounding below 50.
  const double k = std::floor(a * static_cast<double>(B + 1) + 1e-9);
  return k < 0.0 ? 0 : static_cast<std::size_t>(k);
}

void PrepivotConfig::validate() const {
  if (B < 1 || M < 1) throw DomainError("prepivot: B and M must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("prepivot: alpha must lie in (0, 1)");
  const std::size_t k = top_count();
  if (k < 1 || k > B)
    throw DomainError("prepivot: floor(alpha (B + 1)) must lie in [1, B]; increase B for alpha = " + std::to_string(alpha));
}

namespace {

// Row-major copy of the score rows; p is small so plain loops beat Eigen here.
struct Rows {
  std::size_t n = 0, p = 0;
  std::vector<double> v;

  explicit Rows(const Matrix& m) : n(m.rows()), p(m.cols()), v(n * p) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < p; ++k) v[i * p + k] = m(i, k);
  }
  const double* row(std::size_t i) const { return v.data() + i * p; }
};

double pw_of(const Rows& rows, const std::size_t* idx, std::size_t count, double* acc) {
  std::fill(acc, acc + rows.p, 0.0);
  for (std::size_t t = 0; t < count; ++t) {
    const double* r = rows.row(idx[t]);
    for (std::size_t k = 0; k < rows.p; ++k) acc[k] += r[k];
  }
  double s = 0.0;
  for (std::size_t k = 0; k < rows.p; ++k) s += acc[k] * acc[k];
  return s / static_cast<double>(count);
}

std::size_t critical_index(std::size_t count_threshold, std::size_t M, std::size_t B) {
  // ceil(T B / M) without floating point.
  return (count_threshold * B + M - 1) / M;
}

// Shared per-call state: outer weights, outer draws and their ordering.
class Engine {
 public:
  Engine(const Matrix& scores, const PrepivotConfig& cfg)
      : cfg_(cfg), rows_(scores), n_(rows_.n), acc_(rows_.p) {
    if (scores.rows() < 2 || scores.cols() < 1) throw DomainError("prepivot: need at least two score rows");
    if (!scores.allFinite()) throw DomainError("prepivot: non-finite score contribution");
    statistic_ = pw_us(scores);
    const WeightsOutcome w = try_solve_weights(scores);
    outer_ok_ = w.status == WeightsStatus::Ok;
    if (!outer_ok_) {
      if (cfg.hull_policy == HullPolicy::Error) {
        if (w.status == WeightsStatus::HullViolation)
          throw HullError("prepivot: zero is not interior to the convex hull of the score contributions");
        throw NumericError("prepivot: null-constrained weights did not converge");
      }
      return;
    }
    std::vector<double> wt(w.result.weights.data(), w.result.weights.data() + n_);
    outer_alias_ = num::AliasTable(wt);
    outer_root_ = cfg.rng.substream(0);
    inner_root_ = cfg.rng.substream(1);

    indices_.resize(cfg.B * n_);
    outer_.resize(cfg.B);
    for (std::size_t b = 0; b < cfg.B; ++b) {
      num::RngStream s = outer_root_.substream(b);
      std::size_t* idx = indices_.data() + b * n_;
      for (std::size_t t = 0; t < n_; ++t) idx[t] = outer_alias_.draw(s);
      outer_[b] = pw_of(rows_, idx, n_, acc_.data());
    }
    order_.resize(cfg.B);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return outer_[a] > outer_[b]; });
  }

  bool outer_ok() const { return outer_ok_; }
  double statistic() const { return statistic_; }
  const std::vector<double>& outer() const { return outer_; }
  const std::vector<std::size_t>& order() const { return order_; }

  // Inner loop of outer replicate b, resumable. `zero_at` records the inner
  // replicate positions whose value exceeded the outer value.
  struct Inner {
    bool prepared = false;
    bool failed = false;
    num::AliasTable alias;
    num::RngStream rng;
    std::size_t m = 0;
    std::size_t count = 0;  // inner values <= outer value
    std::vector<std::size_t> zero_at;
  };

  void prepare(std::size_t b, Inner& st) const {
    st.prepared = true;
    const std::size_t* idx = indices_.data() + b * n_;
    Matrix boot(n_, rows_.p);
    for (std::size_t t = 0; t < n_; ++t)
      for (std::size_t k = 0; k < rows_.p; ++k) boot(t, k) = rows_.row(idx[t])[k];
    const WeightsOutcome w = try_solve_weights(boot);
    if (w.status != WeightsStatus::Ok) {
      st.failed = true;
      return;
    }
    std::vector<double> wt(w.result.weights.data(), w.result.weights.data() + n_);
    st.alias = num::AliasTable(wt);
    st.rng = inner_root_.substream(b);
  }

  // Advances until `zeros_needed` exceedances are seen or M draws are done.
  void advance(std::size_t b, Inner& st, std::size_t zeros_needed, std::size_t& drawn) {
    if (!st.prepared) prepare(b, st);
    if (st.failed) return;
    const std::size_t* boot = indices_.data() + b * n_;
    const double ref = outer_[b];
    std::vector<std::size_t>& scratch = scratch_;
    scratch.resize(n_);
    while (st.m < cfg_.M && st.zero_at.size() < zeros_needed) {
      for (std::size_t t = 0; t < n_; ++t) scratch[t] = boot[st.alias.draw(st.rng)];
      const double v = pw_of(rows_, scratch.data(), n_, acc_.data());
      if (v <= ref)
        ++st.count;
      else
        st.zero_at.push_back(st.m);
      ++st.m;
      ++drawn;
    }
  }

  PrepivotResult base_result(double alpha) const {
    PrepivotResult r;
    r.alpha = alpha;
    r.B = cfg_.B;
    r.M = cfg_.M;
    r.statistic = statistic_;
    r.outer_values = outer_;
    return r;
  }

  void finish(PrepivotResult& r, std::size_t count_threshold) const {
    r.delta_threshold = static_cast<double>(count_threshold) / static_cast<double>(cfg_.M);
    const std::size_t idx = critical_index(count_threshold, cfg_.M, cfg_.B);
    if (idx == 0) {
      r.critical_value = -std::numeric_limits<double>::infinity();
    } else {
      // order_ is descending; the idx-th smallest sits at position B - idx.
      r.critical_value = outer_[order_[cfg_.B - idx]];
    }
    r.reject = r.statistic >= r.critical_value;
    std::size_t ge = 0;
    for (double v : outer_) ge += v >= r.statistic;
    r.pvalue_outer = static_cast<double>(ge) / static_cast<double>(cfg_.B);
  }

  PrepivotResult outer_failure(double alpha) const {
    PrepivotResult r;
    r.alpha = alpha;
    r.B = cfg_.B;
    r.M = cfg_.M;
    r.statistic = statistic_;
    r.outer_hull_failure = true;
    r.reject = true;
    r.delta_threshold = std::numeric_limits<double>::quiet_NaN();
    r.critical_value = std::numeric_limits<double>::quiet_NaN();
    r.pvalue_outer = std::numeric_limits<double>::quiet_NaN();
    return r;
  }

  std::size_t outer_index(std::size_t b, std::size_t t) const { return indices_[b * n_ + t]; }

 private:
  const PrepivotConfig& cfg_;
  Rows rows_;
  std::size_t n_;
  std::vector<double> acc_;
  std::vector<std::size_t> scratch_;
  double statistic_ = 0.0;
  bool outer_ok_ = false;
  num::AliasTable outer_alias_;
  num::RngStream outer_root_, inner_root_;
  std::vector<std::size_t> indices_;
  std::vector<double> outer_;
  std::vector<std::size_t> order_;
};

PrepivotResult run_level(Engine& eng, std::vector<Engine::Inner>& inner, const PrepivotConfig& cfg, double alpha) {
  PrepivotResult r = eng.base_result(alpha);
  PrepivotDiagnostics& d = r.diagnostics;
  const std::size_t K = cfg.top_count_for(alpha);
  const std::size_t M = cfg.M;
  const auto& order = eng.order();

  // Counts of the current top-K inner calibrations; the threshold is the minimum.
  std::multiset<std::size_t> top;
  for (std::size_t j = 0; j < K; ++j) {
    const std::size_t b = order[j];
    Engine::Inner& st = inner[b];
    eng.advance(b, st, M + 1, d.inner_replicates);
    ++d.inner_loops_started;
    if (st.failed) {
      ++d.hull_failures;
      top.insert(0);
    } else {
      top.insert(st.count);
    }
  }
  std::size_t T = *top.begin();

  for (std::size_t j = K; j < cfg.B; ++j) {
    const std::size_t b = order[j];
    Engine::Inner& st = inner[b];
    // Stop once count + (M - m) <= T, i.e. after M - T exceedances.
    const std::size_t z = M - T;
    if (z == 0) continue;  // stops before the first draw
    eng.advance(b, st, z, d.inner_replicates);
    ++d.inner_loops_started;
    if (st.failed) {
      ++d.hull_failures;
      continue;
    }
    if (st.zero_at.size() >= z) {
      if (st.zero_at[z - 1] + 1 < M) ++d.inner_loops_early_stopped;
      continue;
    }
    // Ran to completion with count > T: replaces the smallest of the top K.
    top.erase(top.begin());
    top.insert(st.count);
    T = *top.begin();
    ++d.threshold_replacements;
  }
  eng.finish(r, T);
  return r;
}

}  // namespace

std::vector<PrepivotResult> prepivot_test_levels(const Matrix& scores, const PrepivotConfig& cfg,
                                                 const std::vector<double>& alphas) {
  if (alphas.empty()) throw DomainError("prepivot: empty alpha list");
  for (double a : alphas) {
    PrepivotConfig c = cfg;
    c.alpha = a;
    c.validate();
  }
  Engine eng(scores, cfg);
  std::vector<PrepivotResult> out;
  if (!eng.outer_ok()) {
    for (double a : alphas) out.push_back(eng.outer_failure(a));
    return out;
  }
  std::vector<Engine::Inner> inner(cfg.B);
  for (double a : alphas) out.push_back(run_level(eng, inner, cfg, a));
  return out;
}

PrepivotResult prepivot_test(const Matrix& scores, const PrepivotConfig& cfg) {
  return prepivot_test_levels(scores, cfg, {cfg.alpha}).front();
}

PrepivotResult fullblown_reference(const Matrix& scores, const PrepivotConfig& cfg) {
  cfg.validate();
  Engine eng(scores, cfg);
  if (!eng.outer_ok()) return eng.outer_failure(cfg.alpha);
  PrepivotResult r = eng.base_result(cfg.alpha);
  std::vector<std::size_t> counts(cfg.B, 0);
  for (std::size_t b = 0; b < cfg.B; ++b) {
    Engine::Inner st;
    eng.advance(b, st, cfg.M + 1, r.diagnostics.inner_replicates);
    ++r.diagnostics.inner_loops_started;
    if (st.failed)
      ++r.diagnostics.hull_failures;
    else
      counts[b] = st.count;
  }
  std::sort(counts.begin(), counts.end(), std::greater<>());
  eng.finish(r, counts[cfg.top_count() - 1]);
  return r;
}

std::vector<std::size_t> outer_index_set(const Matrix& scores, const PrepivotConfig& cfg, std::size_t b) {
  if (b >= cfg.B) throw DomainError("outer_index_set: replicate index out of range");
  const WeightsOutcome w = try_solve_weights(scores);
  if (w.status != WeightsStatus::Ok) throw HullError("outer_index_set: infeasible null-constrained weights");
  std::vector<double> wt(w.result.weights.data(), w.result.weights.data() + w.result.weights.size());
  const num::AliasTable alias(wt);
  num::RngStream s = cfg.rng.substream(0).substream(b);
  std::vector<std::size_t> idx(static_cast<std::size_t>(scores.rows()));
  for (auto& i : idx) i = alias.draw(s);
  return idx;
}

double resampled_pw_us(const Matrix& scores, const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw DomainError("resampled_pw_us: empty index set");
  const Rows rows(scores);
  for (std::size_t i : indices)
    if (i >= rows.n) throw DomainError("resampled_pw_us: index out of range");
  std::vector<double> acc(rows.p);
  return pw_of(rows, indices.data(), indices.size(), acc.data());
}

double empirical_quantile(std::vector<double> values, double level) {
  if (values.empty()) throw DomainError("empirical_quantile: no values");
  if (!(level >= 0.0 && level <= 1.0)) throw DomainError("empirical_quantile: level outside [0, 1]");
  const auto idx = static_cast<std::size_t>(std::ceil(level * static_cast<double>(values.size()) - 1e-9));
  if (idx == 0) return -std::numeric_limits<double>::infinity();
  std::nth_element(values.begin(), values.begin() + (idx - 1), values.end());
  return values[idx - 1];
}

std::vector<ConfidencePoint> prepivot_confidence_scan(const PairwiseModel& model, const DataMatrix& data,
                                                      const std::vector<Vector>& grid, const PrepivotConfig& cfg,
                                                      const std::vector<double>& alphas) {
  if (grid.empty()) throw DomainError("confidence scan: empty grid");
  std::vector<ConfidencePoint> out;
  out.reserve(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    model.require_domain(grid[g]);
    ConfidencePoint pt;
    pt.theta = grid[g];
    const Matrix scores = model.score_matrix(grid[g], data);
    PrepivotConfig c = cfg;
    c.rng = cfg.rng.substream(g);
    pt.results = prepivot_test_levels(scores, c, alphas);
    pt.statistic = pt.results.front().statistic;
    pt.hull_failure = pt.results.front().outer_hull_failure;
    for (const auto& r : pt.results) pt.member.push_back(!r.reject);
    out.push_back(std::move(pt));
  }
  return out;
}

namespace {

std::string num6(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return std::stod(num6(v));
  return num6(v);
}

}  // namespace

std::string to_json(const PrepivotResult& r, std::size_t outer_value_cap) {
  nlohmann::ordered_json j;
  j["alpha"] = json_number(r.alpha);
  j["B"] = r.B;
  j["M"] = r.M;
  j["statistic"] = json_number(r.statistic);
  j["delta_threshold"] = json_number(r.delta_threshold);
  j["critical_value"] = json_number(r.critical_value);
  j["reject"] = r.reject;
  j["pvalue_outer"] = json_number(r.pvalue_outer);
  j["outer_hull_failure"] = r.outer_hull_failure;
  j["diagnostics"] = {{"inner_loops_started", r.diagnostics.inner_loops_started},
                      {"inner_loops_early_stopped", r.diagnostics.inner_loops_early_stopped},
                      {"threshold_replacements", r.diagnostics.threshold_replacements},
                      {"hull_failures", r.diagnostics.hull_failures},
                      {"inner_replicates", r.diagnostics.inner_replicates}};
  if (r.outer_values.size() <= outer_value_cap) {
    nlohmann::json vals = nlohmann::json::array();
    for (double v : r.outer_values) vals.push_back(json_number(v));
    j["outer_values"] = vals;
  } else {
    j["outer_values"] = nullptr;
  }
  return j.dump(2);
}

std::string to_csv(const PrepivotResult& r, std::size_t outer_value_cap) {
  std::string s = "key,value\n";
  const auto kv = [&](const std::string& k, const std::string& v) { s += k + "," + v + "\n"; };
  kv("alpha", num6(r.alpha));
  kv("B", std::to_string(r.B));
  kv("M", std::to_string(r.M));
  kv("statistic", num6(r.statistic));
  kv("delta_threshold", num6(r.delta_threshold));
  kv("critical_value", num6(r.critical_value));
  kv("reject", r.reject ? "1" : "0");
  kv("pvalue_outer", num6(r.pvalue_outer));
  kv("outer_hull_failure", r.outer_hull_failure ? "1" : "0");
  kv("inner_loops_started", std::to_string(r.diagnostics.inner_loops_started));
  kv("inner_loops_early_stopped", std::to_string(r.diagnostics.inner_loops_early_stopped));
  kv("threshold_replacements", std::to_string(r.diagnostics.threshold_replacements));
  kv("hull_failures", std::to_string(r.diagnostics.hull_failures));
  kv("inner_replicates", std::to_string(r.diagnostics.inner_replicates));
  if (r.outer_values.size() <= outer_value_cap)
    for (std::size_t b = 0; b < r.outer_values.size(); ++b) kv("outer_" + std::to_string(b), num6(r.outer_values[b]));
  return s;
}

}  // namespace plprep
