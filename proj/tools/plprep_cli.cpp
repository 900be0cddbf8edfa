// Command-line front end; talks to the library through the C interface only.
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "plprep/plprep.h"

namespace {

struct Failure {
  int code;
};

void check(plp_status s, const char* what) {
  if (s == PLP_OK) return;
  std::fprintf(stderr, "plprep: %s: %s: %s\n", what, plp_status_string(s), plp_last_error());
  throw Failure{s == PLP_ERR_PARSE || s == PLP_ERR_IO ? 2 : 1};
}

std::string g6(double v) {
  char b[64];
  std::snprintf(b, sizeof b, "%.6g", v);
  return b;
}

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      std::fprintf(stderr, "plprep: %s: '%s' is not a number\n", what, item.c_str());
      throw Failure{2};
    }
  }
  if (out.empty()) {
    std::fprintf(stderr, "plprep: %s: empty list\n", what);
    throw Failure{2};
  }
  return out;
}

struct Common {
  std::string spec_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> threads;
  std::optional<std::string> hull_policy;

  void add(CLI::App* app, bool spec_required) {
    auto* o = app->add_option("--spec", spec_path, "experiment spec (JSON)");
    if (spec_required) o->required();
    o->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "master seed (overrides the spec)");
    app->add_option("--out", out, "output directory (overrides the spec)");
    app->add_option("--threads", threads, "worker threads (overrides the spec)")->check(CLI::PositiveNumber);
    app->add_option("--hull-policy", hull_policy, "convex hull failures: reject-point or error")
        ->check(CLI::IsMember({"reject-point", "error"}));
  }

  plp_hull_policy policy() const {
    return hull_policy && *hull_policy == "error" ? PLP_HULL_ERROR : PLP_HULL_REJECT_POINT;
  }

  // Loads the spec and applies flag overrides.
  plp_spec* load() const {
    plp_spec* spec = nullptr;
    check(plp_spec_load(spec_path.c_str(), &spec), "loading spec");
    if (seed) check(plp_spec_set_seed(spec, *seed), "--seed");
    if (out) check(plp_spec_set_out_dir(spec, out->c_str()), "--out");
    if (threads) check(plp_spec_set_threads(spec, *threads), "--threads");
    if (hull_policy) check(plp_spec_set_hull_policy(spec, policy()), "--hull-policy");
    return spec;
  }
};

struct ModelFlags {
  std::string type = "mvn";
  std::size_t q = 10;
  std::size_t n_beta = 2;

  void add(CLI::App* app) {
    app->add_option("--model", type, "model: mvn or probit (ignored with --spec)")->check(CLI::IsMember({"mvn", "probit"}));
    app->add_option("--q", q, "responses per unit");
    app->add_option("--n-beta", n_beta, "regression coefficients (probit)");
  }

  plp_model* make() const {
    plp_model* m = nullptr;
    if (type == "mvn")
      check(plp_model_create_mvn(q, &m), "creating model");
    else
      check(plp_model_create_probit(q, n_beta, &m), "creating model");
    return m;
  }
};

std::string read_string(char* s) {
  std::string out = s ? s : "";
  plp_string_free(s);
  return out;
}

int cmd_test(const Common& c, const ModelFlags& mf, const std::string& data_path, const std::string& design_path,
             const std::string& theta0_s, std::size_t B, std::size_t M, const std::string& alpha_s) {
  plp_model* model = nullptr;
  std::uint64_t seed = c.seed.value_or(1);
  if (!c.spec_path.empty()) {
    plp_spec* spec = c.load();
    check(plp_spec_model(spec, &model), "model from spec");
    plp_spec_free(spec);
  } else {
    model = mf.make();
  }
  plp_dataset* data = nullptr;
  check(plp_dataset_load_csv(data_path.c_str(), design_path.empty() ? nullptr : design_path.c_str(), &data), "loading data");
  const std::vector<double> theta0 = parse_list(theta0_s, "--theta0");
  const std::vector<double> alphas = parse_list(alpha_s, "--alpha");
  std::vector<plp_test_result> res(alphas.size());
  check(plp_prepivot_test(model, data, theta0.data(), theta0.size(), B, M, alphas.data(), alphas.size(), seed,
                          c.policy(), res.data()),
        "prepivot test");
  char name[128];
  check(plp_model_name(model, name, sizeof name), "model name");
  std::printf("model          %s\n", name);
  std::printf("units          %zu\n", plp_dataset_n(data));
  std::printf("theta0        ");
  for (double v : theta0) std::printf(" %s", g6(v).c_str());
  std::printf("\nB, M           %zu, %zu\nseed           %" PRIu64 "\n", B, M, seed);
  std::printf("pW_us          %s\n", g6(res[0].statistic).c_str());
  if (res[0].outer_hull_failure) std::printf("note           zero outside the convex hull of the scores; rejected\n");
  std::printf("%-8s %-10s %-12s %-12s %-8s %s\n", "alpha", "delta", "critical", "p_outer", "reject", "inner(started/stopped/hull)");
  for (const auto& r : res)
    std::printf("%-8s %-10s %-12s %-12s %-8s %zu/%zu/%zu\n", g6(r.alpha).c_str(), g6(r.delta_threshold).c_str(),
                g6(r.critical_value).c_str(), g6(r.pvalue_outer).c_str(), r.reject ? "yes" : "no", r.inner_loops_started,
                r.inner_loops_early_stopped, r.hull_failures);
  if (c.out) {
    char* json = nullptr;
    check(plp_prepivot_test_json(model, data, theta0.data(), theta0.size(), B, M, alphas.data(), alphas.size(), seed,
                                 c.policy(), &json),
          "prepivot test");
    std::filesystem::create_directories(*c.out);
    const auto path = std::filesystem::path(*c.out) / "test_result.json";
    std::ofstream(path) << read_string(json) << "\n";
    std::printf("wrote %s\n", path.string().c_str());
  }
  plp_dataset_free(data);
  plp_model_free(model);
  return 0;
}

int cmd_simulate(const Common& c, std::optional<std::size_t> trials) {
  plp_spec* spec = c.load();
  if (trials) check(plp_spec_set_trials(spec, *trials), "--trials");
  char* summary = nullptr;
  check(plp_run_study(spec, &summary), "study");
  const bool is_rejection = std::string(summary).find("\"kind\": \"rejection\"") != std::string::npos;
  plp_string_free(summary);
  const std::string out_dir = plp_spec_out_dir(spec);
  std::printf("results written to %s\n", out_dir.c_str());
  const auto rejection = std::filesystem::path(out_dir) / "rejection.csv";
  if (is_rejection) {
    std::ifstream in(rejection);
    std::string line;
    while (std::getline(in, line)) std::printf("%s\n", line.c_str());
  }
  plp_spec_free(spec);
  return 0;
}

int cmd_confset(const Common& c, const std::string& data_path, const std::string& design_path) {
  plp_spec* spec = c.load();
  plp_dataset* data = nullptr;
  check(plp_dataset_load_csv(data_path.c_str(), design_path.empty() ? nullptr : design_path.c_str(), &data), "loading data");
  char* summary = nullptr;
  check(plp_run_confset(spec, data, &summary), "confidence scan");
  plp_string_free(summary);
  std::printf("confidence-set membership written to %s\n", plp_spec_out_dir(spec));
  plp_dataset_free(data);
  plp_spec_free(spec);
  return 0;
}

int cmd_info_cache(const Common& c, const std::string& list_dir, bool grid) {
  char* listing = nullptr;
  if (!list_dir.empty()) {
    check(plp_info_cache_list(list_dir.c_str(), &listing), "listing cache");
  } else {
    if (c.spec_path.empty()) {
      std::fprintf(stderr, "plprep: info-cache needs --spec or --list\n");
      return 2;
    }
    plp_spec* spec = c.load();
    check(plp_info_cache(spec, grid ? 1 : 0, &listing), "info cache");
    plp_spec_free(spec);
  }
  std::printf("%s\n", read_string(listing).c_str());
  return 0;
}

int cmd_gen_data(const Common& c, const ModelFlags& mf, const std::string& theta_s, std::size_t n,
                 const std::string& path, const std::string& design_path) {
  plp_model* model = nullptr;
  std::vector<double> theta;
  if (!c.spec_path.empty()) {
    plp_spec* spec = c.load();
    check(plp_spec_model(spec, &model), "model from spec");
    std::size_t p = 0;
    check(plp_spec_theta(spec, nullptr, 0, &p), "theta");
    theta.resize(p);
    check(plp_spec_theta(spec, theta.data(), p, &p), "theta");
    plp_spec_free(spec);
  } else {
    model = mf.make();
  }
  if (!theta_s.empty()) theta = parse_list(theta_s, "--theta");
  if (theta.empty()) {
    std::fprintf(stderr, "plprep: gen-data needs --theta or --spec\n");
    return 2;
  }
  plp_dataset* data = nullptr;
  check(plp_dataset_simulate(model, theta.data(), theta.size(), n, c.seed.value_or(1), 0, &data), "simulating");
  check(plp_dataset_save_csv(data, path.c_str(), design_path.empty() ? nullptr : design_path.c_str()), "writing data");
  std::printf("wrote %zu units to %s\n", n, path.c_str());
  plp_dataset_free(data);
  plp_model_free(model);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prepivoted pairwise score tests and confidence sets"};
  app.require_subcommand(1);
  app.set_version_flag("--version", plp_version());

  Common c_test, c_conf, c_sim, c_info, c_gen;
  ModelFlags m_test, m_gen;

  auto* test = app.add_subcommand("test", "prepivoted pW_us test of theta0 on one data set");
  c_test.add(test, false);
  m_test.add(test);
  std::string data_path, design_path, theta0, alphas = "0.05";
  std::size_t B = 1000, M = 1000;
  test->add_option("--data", data_path, "data CSV")->required()->check(CLI::ExistingFile);
  test->add_option("--design", design_path, "design CSV (probit)")->check(CLI::ExistingFile);
  test->add_option("--theta0", theta0, "null value, comma separated")->required();
  test->add_option("--B", B, "outer replicates")->check(CLI::PositiveNumber);
  test->add_option("--M", M, "inner replicates")->check(CLI::PositiveNumber);
  test->add_option("--alpha", alphas, "levels, comma separated");

  auto* conf = app.add_subcommand("confset", "prepivoted confidence-set scan of a spec grid on one data set");
  c_conf.add(conf, true);
  std::string conf_data, conf_design;
  conf->add_option("--data", conf_data, "data CSV")->required()->check(CLI::ExistingFile);
  conf->add_option("--design", conf_design, "design CSV (probit)")->check(CLI::ExistingFile);

  auto* sim = app.add_subcommand("simulate", "Monte Carlo rejection or coverage study from a spec");
  c_sim.add(sim, true);
  std::optional<std::size_t> trials;
  sim->add_option("--trials", trials, "number of trials (overrides the spec)")->check(CLI::PositiveNumber);

  auto* info = app.add_subcommand("info-cache", "precompute or list Monte Carlo information matrices");
  c_info.add(info, false);
  std::string list_dir;
  bool grid = false;
  info->add_option("--list", list_dir, "list the cache files in a directory");
  info->add_flag("--grid", grid, "also cache every grid point of a coverage spec");

  auto* gen = app.add_subcommand("gen-data", "simulate one data set to CSV");
  c_gen.add(gen, false);
  m_gen.add(gen);
  std::string gen_theta, gen_path = "data.csv", gen_design;
  std::size_t gen_n = 20;
  gen->add_option("--theta", gen_theta, "parameter, comma separated (default: spec truth)");
  gen->add_option("--n", gen_n, "units")->check(CLI::PositiveNumber);
  gen->add_option("--file", gen_path, "output data CSV");
  gen->add_option("--design", gen_design, "output design CSV (probit)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*test) return cmd_test(c_test, m_test, data_path, design_path, theta0, B, M, alphas);
    if (*conf) return cmd_confset(c_conf, conf_data, conf_design);
    if (*sim) return cmd_simulate(c_sim, trials);
    if (*info) return cmd_info_cache(c_info, list_dir, grid);
    if (*gen) return cmd_gen_data(c_gen, m_gen, gen_theta, gen_n, gen_path, gen_design);
  } catch (const Failure& f) {
    return f.code;
  }
  return 0;
}
