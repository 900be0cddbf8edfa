#include "plprep/harness/studies.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "plprep/error.hpp"
#include "plprep/harness/contour.hpp"
#include "plprep/harness/parallel.hpp"
#include "plprep/models/mvn_model.hpp"
#include "plprep/num/imhof.hpp"
#include "plprep/num/normal.hpp"

namespace plprep {

double ResultRow::se() const {
  const double p = estimate();
  return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

const ResultRow& ResultTable::find(const std::string& label, double alpha, std::size_t point) const {
  for (const auto& r : rows)
    if (r.statistic.label() == label && r.point == point && std::abs(r.alpha - alpha) < 1e-12) return r;
  throw DomainError("result table has no row for " + label + " at alpha " + format6(alpha));
}

InfoPair cached_mc_true_info(const ExperimentSpec& spec, const Vector& full_theta) {
  const ModelPtr model = spec.model.make();
  const std::string name = model->name();
  std::string path;
  if (!spec.info.cache_dir.empty()) {
    path = (std::filesystem::path(spec.info.cache_dir) /
            (info_cache_key(name, full_theta, spec.info.n_mc, spec.info.seed) + ".csv"))
               .string();
    if (auto hit = load_info_csv(path, name, full_theta, spec.info.n_mc, spec.info.seed)) return *hit;
  }
  InfoPair info = mc_true_info(*model, full_theta, spec.info.n_mc, num::RngStream(spec.info.seed, 0));
  if (!path.empty()) {
    std::filesystem::create_directories(spec.info.cache_dir);
    save_info_csv(info, name, full_theta, path);
  }
  return info;
}

namespace {

InfoPair sub_info(const InfoPair& full, const std::vector<std::size_t>& idx) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  InfoPair r;
  r.provenance = full.provenance;
  r.n_mc = full.n_mc;
  r.seed = full.seed;
  r.J.resize(k, k);
  r.H.resize(k, k);
  const bool se = full.J_se.size() > 0;
  if (se) {
    r.J_se.resize(k, k);
    r.H_se.resize(k, k);
  }
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b) {
      const auto i = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(a)]);
      const auto j = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(b)]);
      r.J(a, b) = full.J(i, j);
      r.H(a, b) = full.H(i, j);
      if (se) {
        r.J_se(a, b) = full.J_se(i, j);
        r.H_se(a, b) = full.H_se(i, j);
      }
    }
  return r;
}

struct Setup {
  ModelPtr full;
  ModelPtr model;  // the model in evaluated coordinates
  std::shared_ptr<const FixedComponentsModel> fixed;
  std::vector<std::size_t> free;
  Vector truth;
  std::vector<Vector> points;
  std::vector<std::optional<InfoPair>> true_info;  // per point
  std::vector<std::optional<num::WeightedChiSq>> true_law;  // pW reference under mc-true info
  std::vector<double> chi2_q;
  bool need_mple = false, need_full = false, need_true = false, need_e = false, need_n = false, need_prepivot = false;
};

Setup make_setup(const ExperimentSpec& spec, bool coverage) {
  Setup s;
  s.full = spec.model.make();
  if (coverage) {
    s.free = spec.grid->free;
    s.fixed = std::make_shared<FixedComponentsModel>(s.full, s.free, spec.model.theta);
    s.model = s.fixed;
    s.truth = s.fixed->restrict(spec.model.theta);
    for (std::size_t g = 0; g < spec.grid->size(); ++g) s.points.push_back(spec.grid->point(g));
  } else {
    for (std::size_t k = 0; k < s.full->param_dim(); ++k) s.free.push_back(k);
    s.model = s.full;
    s.truth = spec.model.theta;
    s.points.push_back(s.truth);
  }
  for (const auto& st : spec.statistics) {
    s.need_mple |= st.needs_estimate();
    s.need_full |= st.full_lr;
    s.need_prepivot |= !st.full_lr && st.kind == StatisticKind::PW_US;
    if (st.provenance) {
      s.need_true |= *st.provenance == InfoProvenance::McTrue;
      s.need_n |= *st.provenance == InfoProvenance::HatAtTheta;
      s.need_e |= *st.provenance == InfoProvenance::HatAtThetaHat;
    }
  }
  const double p = static_cast<double>(s.model->param_dim());
  for (double a : spec.alphas) s.chi2_q.push_back(num::chi2_quantile(1.0 - a, p));

  s.true_info.resize(s.points.size());
  s.true_law.resize(s.points.size());
  if (s.need_true) {
    parallel_for(s.points.size(), spec.threads, [&](std::size_t g, std::size_t) {
      const Vector full_theta = s.fixed ? s.fixed->expand(s.points[g]) : s.points[g];
      const InfoPair info = sub_info(cached_mc_true_info(spec, full_theta), s.free);
      s.true_info[g] = info;
      try {
        if (auto lam = pw_limit_weights(info)) s.true_law[g] = num::WeightedChiSq(std::span<const double>(lam->data(), static_cast<std::size_t>(lam->size())));
      } catch (const Error&) {
      }
    });
  }
  return s;
}

// Per-worker tallies; integer sums make the merge order irrelevant.
struct Tally {
  std::vector<std::size_t> rejects;    // [(s * P + g) * A + a]
  std::vector<std::size_t> undefined;  // [s * P + g]
  std::vector<StatisticDiagnostics> diag;
  std::size_t mple_failures = 0;
  std::size_t full_failures = 0;

  Tally(std::size_t S, std::size_t P, std::size_t A) : rejects(S * P * A, 0), undefined(S * P, 0), diag(S) {}

  void merge(const Tally& o) {
    for (std::size_t i = 0; i < rejects.size(); ++i) rejects[i] += o.rejects[i];
    for (std::size_t i = 0; i < undefined.size(); ++i) undefined[i] += o.undefined[i];
    for (std::size_t s = 0; s < diag.size(); ++s) {
      auto& d = diag[s];
      const auto& e = o.diag[s];
      d.undefined += e.undefined;
      d.outer_hull_failures += e.outer_hull_failures;
      d.calibrations += e.calibrations;
      d.prepivot.inner_loops_started += e.prepivot.inner_loops_started;
      d.prepivot.inner_loops_early_stopped += e.prepivot.inner_loops_early_stopped;
      d.prepivot.threshold_replacements += e.prepivot.threshold_replacements;
      d.prepivot.hull_failures += e.prepivot.hull_failures;
      d.prepivot.inner_replicates += e.prepivot.inner_replicates;
    }
    mple_failures += o.mple_failures;
    full_failures += o.full_failures;
  }
};

class TrialRunner {
 public:
  TrialRunner(const ExperimentSpec& spec, const Setup& setup) : spec_(spec), s_(setup) {}

  // `given` replaces the simulated data set (single-dataset scans).
  void run(std::size_t t, Tally& tally, const DataMatrix* given = nullptr) const {
    const num::RngStream trial = num::RngStream(spec_.seed, 0).substream(t);
    num::RngStream data_rng = trial.substream(0);
    const PairwiseModel& model = *s_.model;
    const DataMatrix data = given ? *given : model.simulate(s_.truth, spec_.n, data_rng);
    const Vector start = given ? model.start_point(data) : s_.truth;
    const std::size_t A = spec_.alphas.size(), P = s_.points.size();

    std::optional<Vector> theta_hat;
    double pl_hat = 0.0;
    if (s_.need_mple) {
      try {
        const MpleResult r = mple(model, data, start);
        if (r.converged) {
          theta_hat = r.theta_hat;
          pl_hat = r.loglik;
        }
      } catch (const Error&) {
      }
      if (!theta_hat) ++tally.mple_failures;
    }
    std::optional<InfoPair> info_e;
    if (s_.need_e && theta_hat) {
      try {
        info_e = hat_info(model, *theta_hat, data, InfoProvenance::HatAtThetaHat);
      } catch (const Error&) {
      }
    }
    std::optional<double> full_hat;
    if (s_.need_full) {
      full_hat = full_max(data, start);
      if (!full_hat) ++tally.full_failures;
    }

    for (std::size_t g = 0; g < P; ++g) {
      const Vector& theta0 = s_.points[g];
      const Matrix scores = model.score_matrix(theta0, data);
      std::optional<InfoPair> info_n;
      if (s_.need_n) {
        try {
          info_n = hat_info(model, theta0, data, InfoProvenance::HatAtTheta);
        } catch (const Error&) {
        }
      }
      std::optional<double> pw_value;
      if (theta_hat) {
        try {
          pw_value = pw(pl_hat, model.pairwise_loglik(theta0, data));
        } catch (const Error&) {
        }
      }
      std::vector<PrepivotResult> calib;
      if (s_.need_prepivot) {
        PrepivotConfig cfg;
        cfg.B = spec_.B;
        cfg.M = spec_.M;
        cfg.alpha = spec_.alphas.front();
        cfg.rng = trial.substream(1 + g);
        cfg.hull_policy = spec_.hull_policy;
        calib = prepivot_test_levels(scores, cfg, spec_.alphas);
      }

      for (std::size_t si = 0; si < spec_.statistics.size(); ++si) {
        const StatisticId& id = spec_.statistics[si];
        std::vector<bool> reject(A, false);
        bool undefined = false;

        if (id.full_lr) {
          const auto w = full_lr(data, theta0, full_hat);
          if (!w) {
            undefined = true;
          } else {
            for (std::size_t a = 0; a < A; ++a) reject[a] = *w >= s_.chi2_q[a];
          }
        } else if (id.kind == StatisticKind::PW_US) {
          auto& d = tally.diag[si];
          for (std::size_t a = 0; a < A; ++a) {
            const PrepivotResult& r = calib[a];
            reject[a] = r.reject;
            ++d.calibrations;
            d.outer_hull_failures += r.outer_hull_failure;
            d.prepivot.inner_loops_started += r.diagnostics.inner_loops_started;
            d.prepivot.inner_loops_early_stopped += r.diagnostics.inner_loops_early_stopped;
            d.prepivot.threshold_replacements += r.diagnostics.threshold_replacements;
            d.prepivot.hull_failures += r.diagnostics.hull_failures;
            d.prepivot.inner_replicates += r.diagnostics.inner_replicates;
          }
        } else {
          const InfoPair* info = nullptr;
          switch (*id.provenance) {
            case InfoProvenance::McTrue: info = s_.true_info[g] ? &*s_.true_info[g] : nullptr; break;
            case InfoProvenance::HatAtTheta: info = info_n ? &*info_n : nullptr; break;
            case InfoProvenance::HatAtThetaHat: info = info_e ? &*info_e : nullptr; break;
          }
          std::optional<double> value;
          if (info) value = evaluate(id, *info, theta0, theta_hat, pw_value, scores, data.n());
          if (!value || !std::isfinite(*value)) {
            undefined = true;
          } else if (id.kind == StatisticKind::PW) {
            if (!pw_decisions(*value, *info, *id.provenance == InfoProvenance::McTrue ? &s_.true_law[g] : nullptr, reject))
              undefined = true;
          } else {
            for (std::size_t a = 0; a < A; ++a) reject[a] = *value >= s_.chi2_q[a];
          }
        }

        if (undefined) {
          // An undefined statistic counts as a rejection (non-coverage).
          std::fill(reject.begin(), reject.end(), true);
          ++tally.undefined[si * P + g];
          ++tally.diag[si].undefined;
        }
        for (std::size_t a = 0; a < A; ++a) tally.rejects[(si * P + g) * A + a] += reject[a];
      }
    }
  }

 private:
  std::optional<double> evaluate(const StatisticId& id, const InfoPair& info, const Vector& theta0,
                                 const std::optional<Vector>& theta_hat, const std::optional<double>& pw_value,
                                 const Matrix& scores, std::size_t n) const {
    try {
      switch (id.kind) {
        case StatisticKind::PW_S: return pw_s(scores, info);
        case StatisticKind::PW_W:
          if (!theta_hat) return std::nullopt;
          return pw_w(theta0, *theta_hat, info, n);
        case StatisticKind::PW:
          return pw_value;
        case StatisticKind::PW_1:
          if (!pw_value) return std::nullopt;
          return pw_1(*pw_value, info);
        case StatisticKind::PW_CB:
          if (!pw_value || !theta_hat) return std::nullopt;
          return pw_cb(*pw_value, theta0, *theta_hat, info);
        case StatisticKind::PW_INV:
          if (!pw_value) return std::nullopt;
          return pw_inv(*pw_value, scores, info);
        case StatisticKind::PW_US: break;
      }
    } catch (const Error&) {
    }
    return std::nullopt;
  }

  // pW against the weighted chi-square law with weights eig(H^{-1} J).
  bool pw_decisions(double value, const InfoPair& info, const std::optional<num::WeightedChiSq>* fixed_law,
                    std::vector<bool>& reject) const {
    try {
      std::optional<num::WeightedChiSq> law;
      if (fixed_law) {
        if (!*fixed_law) return false;
        law = **fixed_law;
      } else {
        const auto lam = pw_limit_weights(info);
        if (!lam) return false;
        law.emplace(std::span<const double>(lam->data(), static_cast<std::size_t>(lam->size())));
      }
      const double cdf = num::imhof_cdf(value, *law);
      for (std::size_t a = 0; a < spec_.alphas.size(); ++a) reject[a] = cdf >= 1.0 - spec_.alphas[a];
      return true;
    } catch (const Error&) {
      return false;
    }
  }

  double full_loglik(const DataMatrix& data, const Vector& t) const {
    const Vector f = s_.fixed ? s_.fixed->expand(t) : t;
    if (!s_.full->in_domain(f)) return -std::numeric_limits<double>::infinity();
    return mvn_full_loglik(MvnCsParams::from_vector(f, spec_.model.q), data);
  }

  std::optional<double> full_max(const DataMatrix& data, const Vector& start) const {
    try {
      const auto f = [&](const Vector& t) { return full_loglik(data, t); };
      const num::MaximizeResult r = num::maximize(f, start, 1e-7 * static_cast<double>(data.n()));
      if (!r.converged) return std::nullopt;
      return r.value;
    } catch (const Error&) {
      return std::nullopt;
    }
  }

  std::optional<double> full_lr(const DataMatrix& data, const Vector& theta0, const std::optional<double>& hat) const {
    if (!hat) return std::nullopt;
    const double l0 = full_loglik(data, theta0);
    const double w = 2.0 * (*hat - l0);
    if (w < 0.0) {
      if (w < -1e-6 * (1.0 + std::abs(*hat))) return std::nullopt;
      return 0.0;
    }
    return w;
  }

  const ExperimentSpec& spec_;
  const Setup& s_;
};

ResultTable run_study(const ExperimentSpec& spec, bool coverage, const DataMatrix* given = nullptr) {
  spec.validate();
  if (coverage && !spec.grid) throw DomainError("a grid is required");
  const Setup setup = make_setup(spec, coverage);
  const std::size_t S = spec.statistics.size(), P = setup.points.size(), A = spec.alphas.size();
  const std::size_t trials = given ? 1 : spec.trials;
  const std::size_t W = std::max<std::size_t>(1, std::min(spec.threads, trials));
  std::vector<Tally> tallies(W, Tally(S, P, A));
  const TrialRunner runner(spec, setup);
  parallel_for(trials, W, [&](std::size_t t, std::size_t w) { runner.run(t, tallies[w], given); });
  Tally total(S, P, A);
  for (const auto& t : tallies) total.merge(t);

  ResultTable table;
  table.kind = coverage ? "coverage" : "rejection";
  const auto names = setup.full->param_names();
  for (std::size_t k : setup.free) table.param_names.push_back(names[k]);
  for (std::size_t si = 0; si < S; ++si)
    for (std::size_t g = 0; g < P; ++g)
      for (std::size_t a = 0; a < A; ++a) {
        ResultRow r;
        r.statistic = spec.statistics[si];
        r.point = g;
        r.theta = setup.points[g];
        r.alpha = spec.alphas[a];
        const std::size_t rej = total.rejects[(si * P + g) * A + a];
        r.hits = coverage ? trials - rej : rej;
        r.trials = trials;
        r.undefined = total.undefined[si * P + g];
        table.rows.push_back(r);
      }
  auto& d = table.diagnostics;
  d.trials = trials;
  d.grid_points = P;
  d.mple_failures = total.mple_failures;
  d.full_mle_failures = total.full_failures;
  d.per_statistic = total.diag;
  for (std::size_t g = 0; g < P; ++g)
    if (setup.true_info[g]) d.mc_true.push_back({g, *setup.true_info[g]});
  return table;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string o = "\"";
  for (char c : s) o += c == '"' ? std::string("\"\"") : std::string(1, c);
  return o + "\"";
}

nlohmann::ordered_json matrix_json(const Matrix& m) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(std::stod(format6(m(i, j))));
    rows.push_back(row);
  }
  return rows;
}

nlohmann::ordered_json vector_json(const Vector& v) {
  nlohmann::ordered_json a = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(std::stod(format6(v[i])));
  return a;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::string file_label(const StatisticId& id) {
  std::string s = id.label();
  std::replace(s.begin(), s.end(), '^', '_');
  return s;
}

}  // namespace

ResultTable run_rejection_study(const ExperimentSpec& spec) { return run_study(spec, false); }
ResultTable run_coverage_study(const ExperimentSpec& spec) { return run_study(spec, true); }

ResultTable run_confidence_scan(const ExperimentSpec& spec, const DataMatrix& data) {
  data.validate();
  const ModelPtr m = spec.model.make();
  if (data.q() != spec.model.q || data.binary != (spec.model.type == "probit"))
    throw DomainError("data set does not match the model in the spec");
  ResultTable t = run_study(spec, true, &data);
  t.kind = "confset";
  return t;
}

std::string rejection_csv(const ResultTable& t) {
  std::string s = "statistic,provenance,alpha,rejections,trials,undefined,estimate,se\n";
  for (const auto& r : t.rows) {
    s += csv_field(r.statistic.label()) + "," + r.statistic.provenance_label() + "," + format6(r.alpha) + "," +
         std::to_string(r.hits) + "," + std::to_string(r.trials) + "," + std::to_string(r.undefined) + "," +
         format6(r.estimate()) + "," + format6(r.se()) + "\n";
  }
  return s;
}

std::string coverage_csv(const ResultTable& t) {
  std::string s = "statistic,provenance,point";
  for (const auto& n : t.param_names) s += "," + csv_field(n);
  s += ",alpha,covered,trials,undefined,estimate,se\n";
  for (const auto& r : t.rows) {
    s += csv_field(r.statistic.label()) + "," + r.statistic.provenance_label() + "," + std::to_string(r.point);
    for (Eigen::Index k = 0; k < r.theta.size(); ++k) s += "," + format6(r.theta[k]);
    s += "," + format6(r.alpha) + "," + std::to_string(r.hits) + "," + std::to_string(r.trials) + "," +
         std::to_string(r.undefined) + "," + format6(r.estimate()) + "," + format6(r.se()) + "\n";
  }
  return s;
}

std::string diagnostics_json(const ExperimentSpec& spec, const ResultTable& t) {
  nlohmann::ordered_json j;
  j["study"] = t.kind;
  j["spec"] = nlohmann::ordered_json::parse(spec_to_json(spec));
  const auto& d = t.diagnostics;
  j["trials"] = d.trials;
  j["grid_points"] = d.grid_points;
  j["mple_failures"] = d.mple_failures;
  j["full_mle_failures"] = d.full_mle_failures;
  j["undefined_rule"] = "undefined statistic values count as rejection (non-coverage)";
  nlohmann::ordered_json stats = nlohmann::ordered_json::array();
  for (std::size_t s = 0; s < d.per_statistic.size(); ++s) {
    const auto& sd = d.per_statistic[s];
    nlohmann::ordered_json e;
    e["statistic"] = spec.statistics[s].label();
    e["provenance"] = spec.statistics[s].provenance_label();
    e["undefined"] = sd.undefined;
    if (!spec.statistics[s].full_lr && spec.statistics[s].kind == StatisticKind::PW_US) {
      const auto& p = sd.prepivot;
      e["prepivot"] = {{"calibrations", sd.calibrations},
                       {"outer_hull_failures", sd.outer_hull_failures},
                       {"inner_loops_started", p.inner_loops_started},
                       {"inner_loops_early_stopped", p.inner_loops_early_stopped},
                       {"threshold_replacements", p.threshold_replacements},
                       {"inner_hull_failures", p.hull_failures},
                       {"inner_hull_failure_rate",
                        p.inner_loops_started ? std::stod(format6(static_cast<double>(p.hull_failures) /
                                                                  static_cast<double>(p.inner_loops_started)))
                                              : 0.0},
                       {"inner_replicates", p.inner_replicates}};
    }
    stats.push_back(e);
  }
  j["statistics"] = stats;
  nlohmann::ordered_json infos = nlohmann::ordered_json::array();
  for (const auto& m : d.mc_true) {
    nlohmann::ordered_json e;
    e["point"] = m.point;
    e["n_mc"] = m.info.n_mc;
    e["seed"] = m.info.seed;
    e["J"] = matrix_json(m.info.J);
    e["H"] = matrix_json(m.info.H);
    if (auto lam = pw_limit_weights(m.info)) e["eigen_HinvJ"] = vector_json(*lam);
    infos.push_back(e);
  }
  j["mc_true_info"] = infos;
  return j.dump(2) + "\n";
}

void write_study_outputs(const ExperimentSpec& spec, const ResultTable& t) {
  const std::filesystem::path dir(spec.out_dir);
  std::filesystem::create_directories(dir);
  if (t.kind == "rejection") {
    write_file(dir / "rejection.csv", rejection_csv(t));
  } else {
    write_file(dir / "coverage_grid.csv", coverage_csv(t));
    if (spec.grid && spec.grid->axes.size() == 2 && spec.grid->axes[0].count >= 2 && spec.grid->axes[1].count >= 2) {
      // Contours at the level closest to 0.05 (nominal 0.95 sets).
      double alpha = spec.alphas.front();
      for (double a : spec.alphas)
        if (std::abs(a - 0.05) < std::abs(alpha - 0.05)) alpha = a;
      const auto& ax = spec.grid->axes;
      for (const auto& id : spec.statistics) {
        ContourGrid cg;
        for (std::size_t i = 0; i < ax[0].count; ++i) cg.x.push_back(ax[0].at(i));
        for (std::size_t i = 0; i < ax[1].count; ++i) cg.y.push_back(ax[1].at(i));
        cg.z.resize(static_cast<Eigen::Index>(ax[0].count), static_cast<Eigen::Index>(ax[1].count));
        for (const auto& r : t.rows)
          if (r.statistic == id && std::abs(r.alpha - alpha) < 1e-12)
            cg.z(static_cast<Eigen::Index>(r.point / ax[1].count), static_cast<Eigen::Index>(r.point % ax[1].count)) =
                r.estimate();
        const std::string title = id.label() + " coverage, nominal " + format6(1.0 - alpha);
        write_file(dir / ("contour_" + file_label(id) + ".svg"),
                   contour_svg(cg, {0.1, 0.3, 0.5, 0.7, 0.9, 1.0 - alpha}, title, t.param_names[0], t.param_names[1]));
      }
    }
  }
  write_file(dir / "diagnostics.json", diagnostics_json(spec, t));
}

}  // namespace plprep
