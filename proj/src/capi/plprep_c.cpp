#include "plprep/plprep.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <string>

#include <json.hpp>

#include "plprep/error.hpp"
#include "plprep/harness/studies.hpp"
#include "plprep/inference/prepivot.hpp"
#include "plprep/inference/statistics.hpp"
#include "plprep/models/mvn_model.hpp"
#include "plprep/models/probit_model.hpp"

struct plp_model {
  plprep::ModelPtr model;
};
struct plp_dataset {
  plprep::DataMatrix data;
};
struct plp_spec {
  plprep::ExperimentSpec spec;
};

namespace {

thread_local std::string g_last_error;

plp_status fail(plp_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class F>
plp_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return PLP_OK;
  } catch (const plprep::HullError& e) {
    return fail(PLP_ERR_HULL, e.what());
  } catch (const plprep::DomainError& e) {
    return fail(PLP_ERR_DOMAIN, e.what());
  } catch (const plprep::NumericError& e) {
    return fail(PLP_ERR_NUMERIC, e.what());
  } catch (const plprep::ParseError& e) {
    return fail(PLP_ERR_PARSE, e.what());
  } catch (const plprep::IoError& e) {
    return fail(PLP_ERR_IO, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(PLP_ERR_IO, e.what());
  } catch (const plprep::Error& e) {
    return fail(PLP_ERR_INTERNAL, e.what());
  } catch (const std::bad_alloc&) {
    return fail(PLP_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PLP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(PLP_ERR_INTERNAL, "unknown error");
  }
}

#define PLP_REQUIRE(cond, msg) \
  do {                         \
    if (!(cond)) return fail(PLP_ERR_INVALID_ARGUMENT, msg); \
  } while (0)

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

plprep::Vector to_vector(const double* v, std::size_t p) {
  plprep::Vector out(static_cast<Eigen::Index>(p));
  for (std::size_t k = 0; k < p; ++k) out[static_cast<Eigen::Index>(k)] = v[k];
  return out;
}

void check_dim(const plp_model* m, std::size_t p) {
  if (p != m->model->param_dim())
    throw plprep::DomainError("parameter has " + std::to_string(p) + " components, model expects " +
                              std::to_string(m->model->param_dim()));
}

plprep::HullPolicy policy_of(plp_hull_policy p) {
  return p == PLP_HULL_ERROR ? plprep::HullPolicy::Error : plprep::HullPolicy::RejectPoint;
}

std::vector<plprep::PrepivotResult> run_test(const plp_model* model, const plp_dataset* data, const double* theta0,
                                             std::size_t p, std::size_t B, std::size_t M, const double* alphas,
                                             std::size_t n_alpha, uint64_t seed, plp_hull_policy policy) {
  check_dim(model, p);
  const plprep::Vector theta = to_vector(theta0, p);
  model->model->require_domain(theta);
  const plprep::Matrix scores = model->model->score_matrix(theta, data->data);
  plprep::PrepivotConfig cfg;
  cfg.B = B;
  cfg.M = M;
  cfg.alpha = alphas[0];
  cfg.rng = plprep::num::RngStream(seed, 0);
  cfg.hull_policy = policy_of(policy);
  return plprep::prepivot_test_levels(scores, cfg, std::vector<double>(alphas, alphas + n_alpha));
}

nlohmann::ordered_json table_summary(const plprep::ResultTable& t) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : t.rows) {
    nlohmann::ordered_json e;
    e["statistic"] = r.statistic.label();
    e["point"] = r.point;
    std::vector<double> th(r.theta.data(), r.theta.data() + r.theta.size());
    e["theta"] = th;
    e["alpha"] = r.alpha;
    e["hits"] = r.hits;
    e["trials"] = r.trials;
    e["undefined"] = r.undefined;
    e["estimate"] = r.estimate();
    e["se"] = r.se();
    rows.push_back(e);
  }
  nlohmann::ordered_json j;
  j["kind"] = t.kind;
  j["rows"] = rows;
  return j;
}

}  // namespace

extern "C" {

const char* plp_version(void) { return "0.1.0"; }
const char* plp_last_error(void) { return g_last_error.c_str(); }

const char* plp_status_string(plp_status s) {
  switch (s) {
    case PLP_OK: return "ok";
    case PLP_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PLP_ERR_DOMAIN: return "domain error";
    case PLP_ERR_NUMERIC: return "numerical failure";
    case PLP_ERR_HULL: return "convex hull condition violated";
    case PLP_ERR_PARSE: return "parse error";
    case PLP_ERR_IO: return "i/o error";
    case PLP_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void plp_string_free(char* s) { std::free(s); }

plp_status plp_model_create_mvn(size_t q, plp_model** out) {
  PLP_REQUIRE(out, "out is null");
  return guarded([&] { *out = new plp_model{std::make_shared<plprep::MvnCsModel>(q)}; });
}

plp_status plp_model_create_probit(size_t q, size_t n_beta, plp_model** out) {
  PLP_REQUIRE(out, "out is null");
  return guarded([&] { *out = new plp_model{std::make_shared<plprep::ProbitModel>(q, n_beta)}; });
}

void plp_model_free(plp_model* model) { delete model; }

size_t plp_model_param_dim(const plp_model* model) { return model ? model->model->param_dim() : 0; }

plp_status plp_model_name(const plp_model* model, char* buf, size_t cap) {
  PLP_REQUIRE(model && buf && cap > 0, "null argument");
  const std::string n = model->model->name();
  const std::size_t len = std::min(cap - 1, n.size());
  std::memcpy(buf, n.data(), len);
  buf[len] = '\0';
  return PLP_OK;
}

plp_status plp_dataset_load_csv(const char* path, const char* design_path, plp_dataset** out) {
  PLP_REQUIRE(path && out, "null argument");
  return guarded([&] {
    *out = new plp_dataset{plprep::load_csv(path, design_path ? std::string(design_path) : std::string())};
  });
}

plp_status plp_dataset_save_csv(const plp_dataset* data, const char* path, const char* design_path) {
  PLP_REQUIRE(data && path, "null argument");
  return guarded([&] { plprep::save_csv(data->data, path, design_path ? std::string(design_path) : std::string()); });
}

plp_status plp_dataset_simulate(const plp_model* model, const double* theta, size_t p, size_t n, uint64_t seed,
                                uint64_t stream_id, plp_dataset** out) {
  PLP_REQUIRE(model && theta && out, "null argument");
  return guarded([&] {
    check_dim(model, p);
    plprep::num::RngStream rng(seed, stream_id);
    *out = new plp_dataset{model->model->simulate(to_vector(theta, p), n, rng)};
  });
}

void plp_dataset_free(plp_dataset* data) { delete data; }
size_t plp_dataset_n(const plp_dataset* data) { return data ? data->data.n() : 0; }
size_t plp_dataset_q(const plp_dataset* data) { return data ? data->data.q() : 0; }

plp_status plp_mple(const plp_model* model, const plp_dataset* data, const double* start, size_t p, double* theta_hat,
                    int* converged) {
  PLP_REQUIRE(model && data && theta_hat, "null argument");
  return guarded([&] {
    check_dim(model, p);
    const plprep::Vector s = start ? to_vector(start, p) : model->model->start_point(data->data);
    const plprep::MpleResult r = plprep::mple(*model->model, data->data, s);
    for (std::size_t k = 0; k < p; ++k) theta_hat[k] = r.theta_hat[static_cast<Eigen::Index>(k)];
    if (converged) *converged = r.converged ? 1 : 0;
  });
}

plp_status plp_pw_us(const plp_model* model, const plp_dataset* data, const double* theta, size_t p, double* out) {
  PLP_REQUIRE(model && data && theta && out, "null argument");
  return guarded([&] {
    check_dim(model, p);
    const plprep::Vector t = to_vector(theta, p);
    model->model->require_domain(t);
    *out = plprep::pw_us(model->model->score_matrix(t, data->data));
  });
}

plp_status plp_prepivot_test(const plp_model* model, const plp_dataset* data, const double* theta0, size_t p, size_t B,
                             size_t M, const double* alphas, size_t n_alpha, uint64_t seed, plp_hull_policy policy,
                             plp_test_result* results) {
  PLP_REQUIRE(model && data && theta0 && alphas && results && n_alpha > 0, "null argument");
  return guarded([&] {
    const auto rs = run_test(model, data, theta0, p, B, M, alphas, n_alpha, seed, policy);
    for (std::size_t k = 0; k < rs.size(); ++k) {
      const auto& r = rs[k];
      plp_test_result& o = results[k];
      o.alpha = r.alpha;
      o.statistic = r.statistic;
      o.delta_threshold = r.delta_threshold;
      o.critical_value = r.critical_value;
      o.pvalue_outer = r.pvalue_outer;
      o.reject = r.reject ? 1 : 0;
      o.outer_hull_failure = r.outer_hull_failure ? 1 : 0;
      o.inner_loops_started = r.diagnostics.inner_loops_started;
      o.inner_loops_early_stopped = r.diagnostics.inner_loops_early_stopped;
      o.threshold_replacements = r.diagnostics.threshold_replacements;
      o.hull_failures = r.diagnostics.hull_failures;
      o.inner_replicates = r.diagnostics.inner_replicates;
    }
  });
}

plp_status plp_prepivot_test_json(const plp_model* model, const plp_dataset* data, const double* theta0, size_t p,
                                  size_t B, size_t M, const double* alphas, size_t n_alpha, uint64_t seed,
                                  plp_hull_policy policy, char** json) {
  PLP_REQUIRE(model && data && theta0 && alphas && json && n_alpha > 0, "null argument");
  return guarded([&] {
    const auto rs = run_test(model, data, theta0, p, B, M, alphas, n_alpha, seed, policy);
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rs) arr.push_back(nlohmann::ordered_json::parse(plprep::to_json(r)));
    *json = dup_string(arr.dump(2));
  });
}

plp_status plp_spec_load(const char* path, plp_spec** out) {
  PLP_REQUIRE(path && out, "null argument");
  return guarded([&] { *out = new plp_spec{plprep::load_spec(path)}; });
}

plp_status plp_spec_parse(const char* json_text, plp_spec** out) {
  PLP_REQUIRE(json_text && out, "null argument");
  return guarded([&] { *out = new plp_spec{plprep::parse_spec_json(json_text)}; });
}

void plp_spec_free(plp_spec* spec) { delete spec; }

plp_status plp_spec_set_seed(plp_spec* spec, uint64_t seed) {
  PLP_REQUIRE(spec, "null spec");
  spec->spec.seed = seed;
  return PLP_OK;
}

plp_status plp_spec_set_threads(plp_spec* spec, size_t threads) {
  PLP_REQUIRE(spec && threads >= 1, "threads must be at least 1");
  spec->spec.threads = threads;
  return PLP_OK;
}

plp_status plp_spec_set_out_dir(plp_spec* spec, const char* dir) {
  PLP_REQUIRE(spec && dir, "null argument");
  spec->spec.out_dir = dir;
  return PLP_OK;
}

plp_status plp_spec_set_hull_policy(plp_spec* spec, plp_hull_policy policy) {
  PLP_REQUIRE(spec, "null spec");
  spec->spec.hull_policy = policy_of(policy);
  return PLP_OK;
}

plp_status plp_spec_set_trials(plp_spec* spec, size_t trials) {
  PLP_REQUIRE(spec && trials >= 1, "trials must be at least 1");
  spec->spec.trials = trials;
  return PLP_OK;
}

plp_status plp_spec_to_json(const plp_spec* spec, char** json) {
  PLP_REQUIRE(spec && json, "null argument");
  return guarded([&] { *json = dup_string(plprep::spec_to_json(spec->spec)); });
}

const char* plp_spec_out_dir(const plp_spec* spec) { return spec ? spec->spec.out_dir.c_str() : ""; }

plp_status plp_spec_model(const plp_spec* spec, plp_model** out) {
  PLP_REQUIRE(spec && out, "null argument");
  return guarded([&] { *out = new plp_model{spec->spec.model.make()}; });
}

plp_status plp_spec_theta(const plp_spec* spec, double* theta, size_t cap, size_t* p) {
  PLP_REQUIRE(spec && p, "null argument");
  const auto& t = spec->spec.model.theta;
  *p = static_cast<size_t>(t.size());
  for (size_t k = 0; k < cap && k < *p; ++k) theta[k] = t[static_cast<Eigen::Index>(k)];
  return PLP_OK;
}

plp_status plp_run_study(const plp_spec* spec, char** summary) {
  PLP_REQUIRE(spec, "null spec");
  return guarded([&] {
    const auto& s = spec->spec;
    const plprep::ResultTable t = s.study == "coverage" ? plprep::run_coverage_study(s) : plprep::run_rejection_study(s);
    plprep::write_study_outputs(s, t);
    if (summary) *summary = dup_string(table_summary(t).dump(2));
  });
}

plp_status plp_run_confset(const plp_spec* spec, const plp_dataset* data, char** summary) {
  PLP_REQUIRE(spec && data, "null argument");
  return guarded([&] {
    const plprep::ResultTable t = plprep::run_confidence_scan(spec->spec, data->data);
    plprep::write_study_outputs(spec->spec, t);
    if (summary) *summary = dup_string(table_summary(t).dump(2));
  });
}

plp_status plp_info_cache(const plp_spec* spec, int include_grid, char** listing) {
  PLP_REQUIRE(spec, "null spec");
  return guarded([&] {
    const auto& s = spec->spec;
    if (s.info.cache_dir.empty()) throw plprep::DomainError("spec.info.cache_dir is not set");
    std::vector<plprep::Vector> thetas{s.model.theta};
    if (include_grid && s.grid)
      for (std::size_t g = 0; g < s.grid->size(); ++g) {
        plprep::Vector full = s.model.theta;
        const plprep::Vector pt = s.grid->point(g);
        for (std::size_t k = 0; k < s.grid->free.size(); ++k)
          full[static_cast<Eigen::Index>(s.grid->free[k])] = pt[static_cast<Eigen::Index>(k)];
        thetas.push_back(full);
      }
    const std::string name = s.model.make()->name();
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& th : thetas) {
      const plprep::InfoPair info = plprep::cached_mc_true_info(s, th);
      nlohmann::ordered_json e;
      e["key"] = plprep::info_cache_key(name, th, s.info.n_mc, s.info.seed);
      e["theta"] = std::vector<double>(th.data(), th.data() + th.size());
      e["n_mc"] = info.n_mc;
      e["seed"] = info.seed;
      arr.push_back(e);
    }
    if (listing) *listing = dup_string(arr.dump(2));
  });
}

plp_status plp_info_cache_list(const char* dir, char** listing) {
  PLP_REQUIRE(dir && listing, "null argument");
  return guarded([&] {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    std::vector<std::string> files;
    if (std::filesystem::is_directory(dir))
      for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.path().extension() == ".csv" && e.path().filename().string().rfind("info_", 0) == 0)
          files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      nlohmann::ordered_json e;
      e["file"] = f;
      std::ifstream in(f);
      std::string line;
      while (std::getline(in, line)) {
        const auto comma = line.find(',');
        if (comma == std::string::npos) continue;
        const std::string key = line.substr(0, comma);
        if (key == "model" || key == "theta" || key == "n_mc" || key == "seed" || key == "provenance")
          e[key] = line.substr(comma + 1);
      }
      arr.push_back(e);
    }
    *listing = dup_string(arr.dump(2));
  });
}

}  // extern "C"
