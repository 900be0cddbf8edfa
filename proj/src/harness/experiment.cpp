#include "plprep/harness/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "plprep/error.hpp"
#include "plprep/models/mvn_model.hpp"
#include "plprep/models/probit_model.hpp"

namespace plprep {

using nlohmann::json;

StatisticId StatisticId::parse(const std::string& s) {
  StatisticId id;
  if (s == "w") {
    id.full_lr = true;
    return id;
  }
  const auto colon = s.find(':');
  id.kind = statistic_from_string(s.substr(0, colon));
  if (id.kind == StatisticKind::PW_US) {
    if (colon != std::string::npos) throw ParseError("pw_us takes no information source: '" + s + "'");
    return id;
  }
  const std::string src = colon == std::string::npos ? "true" : s.substr(colon + 1);
  id.provenance = provenance_from_string(src);
  return id;
}

std::string StatisticId::label() const {
  if (full_lr) return "w";
  if (!provenance) return to_string(kind);
  switch (*provenance) {
    case InfoProvenance::McTrue: return to_string(kind);
    case InfoProvenance::HatAtTheta: return to_string(kind) + "^n";
    case InfoProvenance::HatAtThetaHat: return to_string(kind) + "^e";
  }
  return to_string(kind);
}

std::string StatisticId::provenance_label() const { return provenance ? to_string(*provenance) : "none"; }

bool StatisticId::needs_estimate() const {
  if (full_lr) return false;
  if (provenance == InfoProvenance::HatAtThetaHat) return true;
  return kind == StatisticKind::PW || kind == StatisticKind::PW_W || kind == StatisticKind::PW_1 ||
         kind == StatisticKind::PW_CB || kind == StatisticKind::PW_INV;
}

ModelPtr ModelSpec::make() const {
  if (type == "mvn") return std::make_shared<MvnCsModel>(q);
  if (type == "probit") return std::make_shared<ProbitModel>(q, n_beta);
  throw ParseError("unknown model type '" + type + "' (expected mvn or probit)");
}

double GridAxis::at(std::size_t i) const {
  if (count == 1) return min;
  return min + (max - min) * static_cast<double>(i) / static_cast<double>(count - 1);
}

std::size_t GridSpec::size() const {
  std::size_t s = 1;
  for (const auto& a : axes) s *= a.count;
  return s;
}

Vector GridSpec::point(std::size_t g) const {
  Vector v(static_cast<Eigen::Index>(axes.size()));
  for (std::size_t k = axes.size(); k-- > 0;) {
    v[static_cast<Eigen::Index>(k)] = axes[k].at(g % axes[k].count);
    g /= axes[k].count;
  }
  return v;
}

void ExperimentSpec::validate() const {
  if (study != "rejection" && study != "coverage") throw ParseError("study must be 'rejection' or 'coverage'");
  const ModelPtr m = model.make();
  if (static_cast<std::size_t>(model.theta.size()) != m->param_dim())
    throw DomainError("model.theta has " + std::to_string(model.theta.size()) + " components, expected " +
                      std::to_string(m->param_dim()));
  m->require_domain(model.theta);
  if (n < 2) throw DomainError("n must be at least 2");
  if (trials < 1) throw DomainError("trials must be at least 1");
  if (statistics.empty()) throw DomainError("no statistics requested");
  if (alphas.empty()) throw DomainError("no alpha levels given");
  for (double a : alphas)
    if (!(a > 0.0 && a < 1.0)) throw DomainError("alpha levels must lie in (0, 1)");
  for (const auto& s : statistics) {
    if (s.full_lr && model.type != "mvn") throw DomainError("the full likelihood ratio w is available for the mvn model only");
    if (s.kind == StatisticKind::PW_US && !s.full_lr) {
      PrepivotConfig c;
      c.B = B;
      c.M = M;
      for (double a : alphas) {
        c.alpha = a;
        c.validate();
      }
    }
  }
  if (threads < 1) throw DomainError("threads must be at least 1");
  if (info.n_mc < 10000) throw DomainError("info.n_mc must be at least 10000");
  if (study == "coverage" && !grid) throw DomainError("coverage study needs a grid");
  if (grid) {
    if (grid->free.empty() || grid->free.size() != grid->axes.size())
      throw DomainError("grid: one axis per free component required");
    for (std::size_t k = 0; k < grid->free.size(); ++k) {
      if (grid->free[k] >= m->param_dim()) throw DomainError("grid: free component out of range");
      for (std::size_t l = 0; l < k; ++l)
        if (grid->free[l] == grid->free[k]) throw DomainError("grid: repeated free component");
      if (grid->axes[k].count < 1) throw DomainError("grid: axis count must be positive");
      if (!(grid->axes[k].min <= grid->axes[k].max)) throw DomainError("grid: axis min exceeds max");
    }
    for (std::size_t g = 0; g < grid->size(); ++g) {
      Vector full = model.theta;
      const Vector pt = grid->point(g);
      for (std::size_t k = 0; k < grid->free.size(); ++k) full[static_cast<Eigen::Index>(grid->free[k])] = pt[static_cast<Eigen::Index>(k)];
      if (!m->in_domain(full)) throw DomainError("grid: point " + std::to_string(g) + " lies outside the parameter space");
    }
  }
}

namespace {

Vector to_vector(const json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + " must be an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(std::string(what) + " must be an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

template <class T>
void read(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

}  // namespace

ExperimentSpec parse_spec_json(const std::string& text) {
  ExperimentSpec s;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("spec: ") + e.what());
  }
  try {
    read(j, "study", s.study);
    if (!j.contains("model")) throw ParseError("spec: missing 'model'");
    const json& m = j.at("model");
    read(m, "type", s.model.type);
    read(m, "q", s.model.q);
    read(m, "n_beta", s.model.n_beta);
    if (!m.contains("theta")) throw ParseError("spec: missing 'model.theta'");
    s.model.theta = to_vector(m.at("theta"), "model.theta");
    read(j, "n", s.n);
    if (j.contains("statistics")) {
      s.statistics.clear();
      for (const auto& st : j.at("statistics")) s.statistics.push_back(StatisticId::parse(st.get<std::string>()));
    }
    read(j, "alphas", s.alphas);
    read(j, "trials", s.trials);
    read(j, "B", s.B);
    read(j, "M", s.M);
    read(j, "seed", s.seed);
    if (j.contains("info")) {
      const json& i = j.at("info");
      read(i, "n_mc", s.info.n_mc);
      read(i, "seed", s.info.seed);
      read(i, "cache_dir", s.info.cache_dir);
    }
    if (j.contains("grid")) {
      GridSpec g;
      const json& gj = j.at("grid");
      g.free = gj.at("free").get<std::vector<std::size_t>>();
      for (const auto& a : gj.at("axes")) g.axes.push_back({a.at("min").get<double>(), a.at("max").get<double>(), a.at("count").get<std::size_t>()});
      s.grid = g;
    }
    if (j.contains("hull_policy")) s.hull_policy = hull_policy_from_string(j.at("hull_policy").get<std::string>());
    read(j, "threads", s.threads);
    read(j, "out", s.out_dir);
  } catch (const json::exception& e) {
    throw ParseError(std::string("spec: ") + e.what());
  }
  return s;
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open spec file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_spec_json(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string spec_to_json(const ExperimentSpec& s) {
  nlohmann::ordered_json j;
  j["study"] = s.study;
  j["model"] = {{"type", s.model.type},
                {"q", s.model.q},
                {"n_beta", s.model.n_beta},
                {"theta", std::vector<double>(s.model.theta.data(), s.model.theta.data() + s.model.theta.size())}};
  j["n"] = s.n;
  std::vector<std::string> stats;
  for (const auto& st : s.statistics) {
    if (st.full_lr || !st.provenance) {
      stats.push_back(st.label());
      continue;
    }
    const char* tag = *st.provenance == InfoProvenance::McTrue ? "true" : *st.provenance == InfoProvenance::HatAtTheta ? "n" : "e";
    stats.push_back(to_string(st.kind) + ":" + tag);
  }
  j["statistics"] = stats;
  j["alphas"] = s.alphas;
  j["trials"] = s.trials;
  j["B"] = s.B;
  j["M"] = s.M;
  j["seed"] = s.seed;
  j["info"] = {{"n_mc", s.info.n_mc}, {"seed", s.info.seed}, {"cache_dir", s.info.cache_dir}};
  if (s.grid) {
    nlohmann::ordered_json axes = nlohmann::ordered_json::array();
    for (const auto& a : s.grid->axes) axes.push_back({{"min", a.min}, {"max", a.max}, {"count", a.count}});
    j["grid"] = {{"free", s.grid->free}, {"axes", axes}};
  }
  j["hull_policy"] = to_string(s.hull_policy);
  j["threads"] = s.threads;
  j["out"] = s.out_dir;
  return j.dump(2);
}

std::string format6(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace plprep
