#include "plprep/inference/godambe.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "plprep/error.hpp"

namespace plprep {
namespace {

constexpr double kJacobianStep = 1e-5;
constexpr std::size_t kMcChunk = 10000;

std::string format_theta(const Vector& theta) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (Eigen::Index k = 0; k < theta.size(); ++k) os << (k ? ";" : "") << theta[k];
  return os.str();
}

void write_matrix_row(std::ostream& os, const char* label, const Matrix& m) {
  os << label;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << "," << m(r, c);
  os << "\n";
}

}  // namespace

std::string to_string(InfoProvenance p) {
  switch (p) {
    case InfoProvenance::McTrue: return "mc-true";
    case InfoProvenance::HatAtTheta: return "hat-at-theta";
    case InfoProvenance::HatAtThetaHat: return "hat-at-thetahat";
  }
  return "?";
}

InfoProvenance provenance_from_string(const std::string& s) {
  if (s == "mc-true" || s == "true") return InfoProvenance::McTrue;
  if (s == "hat-at-theta" || s == "n") return InfoProvenance::HatAtTheta;
  if (s == "hat-at-thetahat" || s == "e") return InfoProvenance::HatAtThetaHat;
  throw ParseError("unknown information provenance '" + s + "'");
}

bool InfoPair::h_positive_definite() const { return num::is_positive_definite(H); }

std::optional<Matrix> InfoPair::godambe_inverse_variance() const {
  // V^{-1} = H J^{-1} H
  const auto jinv = num::spd_inverse(J);
  if (!jinv || !h_positive_definite()) return std::nullopt;
  return num::symmetrize(H * (*jinv) * H);
}

Matrix j_hat(const Matrix& scores) {
  if (scores.rows() < 1) throw DomainError("j_hat: empty score matrix");
  return num::symmetrize(scores.transpose() * scores / static_cast<double>(scores.rows()));
}

Matrix h_hat(const PairwiseModel& model, const Vector& theta, const DataMatrix& data) {
  model.require_domain(theta);
  const Eigen::Index p = theta.size();
  Matrix jac(p, p);
  Vector tp = theta, tm = theta;
  const double n = static_cast<double>(data.n());
  for (Eigen::Index k = 0; k < p; ++k) {
    const double h = kJacobianStep * (1.0 + std::abs(theta[k]));
    tp[k] = theta[k] + h;
    tm[k] = theta[k] - h;
    if (!model.in_domain(tp) || !model.in_domain(tm))
      throw NumericError("h_hat: difference stencil leaves the parameter space");
    jac.col(k) = (model.total_score(tp, data) - model.total_score(tm, data)) / (2.0 * h * n);
    tp[k] = tm[k] = theta[k];
  }
  Matrix hm = -num::symmetrize(jac);
  if (!hm.allFinite()) throw NumericError("h_hat: non-finite sensitivity matrix");
  return hm;
}

InfoPair hat_info(const PairwiseModel& model, const Vector& theta, const DataMatrix& data, InfoProvenance provenance) {
  if (provenance == InfoProvenance::McTrue) throw DomainError("hat_info: use mc_true_info for mc-true provenance");
  InfoPair info;
  info.J = j_hat(model.score_matrix(theta, data));
  info.H = h_hat(model, theta, data);
  info.provenance = provenance;
  return info;
}

InfoPair mc_true_info(const PairwiseModel& model, const Vector& theta, std::size_t n_mc, const num::RngStream& rng) {
  if (n_mc < 10000) throw DomainError("mc_true_info: n_mc must be >= 1e4");
  model.require_domain(theta);
  const Eigen::Index p = theta.size();
  Vector steps(p);
  for (Eigen::Index k = 0; k < p; ++k) steps[k] = kJacobianStep * (1.0 + std::abs(theta[k]));
  for (Eigen::Index k = 0; k < p; ++k) {
    Vector t = theta;
    t[k] += steps[k];
    Vector u = theta;
    u[k] -= steps[k];
    if (!model.in_domain(t) || !model.in_domain(u)) throw NumericError("mc_true_info: difference stencil leaves the parameter space");
  }

  Matrix j_sum = Matrix::Zero(p, p), j_sq = Matrix::Zero(p, p);
  Matrix h_sum = Matrix::Zero(p, p), h_sq = Matrix::Zero(p, p);
  std::size_t done = 0;
  for (std::size_t chunk = 0; done < n_mc; ++chunk) {
    const std::size_t m = std::min(kMcChunk, n_mc - done);
    num::RngStream r = rng.substream(chunk);
    const DataMatrix data = model.simulate(theta, m, r);
    const Matrix s0 = model.score_matrix(theta, data);
    std::vector<Matrix> plus(static_cast<std::size_t>(p)), minus(static_cast<std::size_t>(p));
    for (Eigen::Index k = 0; k < p; ++k) {
      Vector t = theta;
      t[k] += steps[k];
      plus[static_cast<std::size_t>(k)] = model.score_matrix(t, data);
      t[k] = theta[k] - steps[k];
      minus[static_cast<std::size_t>(k)] = model.score_matrix(t, data);
    }
    for (std::size_t i = 0; i < m; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const Vector s = s0.row(ii).transpose();
      const Matrix outer = s * s.transpose();
      Matrix jac(p, p);
      for (Eigen::Index k = 0; k < p; ++k)
        jac.col(k) = (plus[static_cast<std::size_t>(k)].row(ii) - minus[static_cast<std::size_t>(k)].row(ii)).transpose() / (2.0 * steps[k]);
      const Matrix hu = -num::symmetrize(jac);
      j_sum += outer;
      j_sq += outer.cwiseProduct(outer);
      h_sum += hu;
      h_sq += hu.cwiseProduct(hu);
    }
    done += m;
  }
  const double nm = static_cast<double>(n_mc);
  InfoPair info;
  info.provenance = InfoProvenance::McTrue;
  info.J = num::symmetrize(j_sum / nm);
  info.H = num::symmetrize(h_sum / nm);
  info.J_se = ((j_sq / nm - info.J.cwiseProduct(info.J)).cwiseMax(0.0) / (nm - 1.0)).cwiseSqrt();
  info.H_se = ((h_sq / nm - info.H.cwiseProduct(info.H)).cwiseMax(0.0) / (nm - 1.0)).cwiseSqrt();
  info.n_mc = n_mc;
  info.seed = rng.seed();
  if (!info.J.allFinite() || !info.H.allFinite()) throw NumericError("mc_true_info: non-finite estimate");
  return info;
}

std::string info_cache_key(const std::string& model_name, const Vector& theta, std::size_t n_mc, std::uint64_t seed) {
  std::ostringstream os;
  os << model_name << "|" << format_theta(theta) << "|" << n_mc << "|" << seed;
  const std::string s = os.str();
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "info_%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void save_info_csv(const InfoPair& info, const std::string& model_name, const Vector& theta, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << std::setprecision(17);
  out << "model," << model_name << "\n";
  out << "theta," << format_theta(theta) << "\n";
  out << "n_mc," << info.n_mc << "\n";
  out << "seed," << info.seed << "\n";
  out << "provenance," << to_string(info.provenance) << "\n";
  out << "p," << info.J.rows() << "\n";
  write_matrix_row(out, "J", info.J);
  write_matrix_row(out, "H", info.H);
  if (info.J_se.size()) write_matrix_row(out, "J_se", info.J_se);
  if (info.H_se.size()) write_matrix_row(out, "H_se", info.H_se);
}

std::optional<InfoPair> load_info_csv(const std::string& path, const std::string& model_name, const Vector& theta,
                                      std::size_t n_mc, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    kv[line.substr(0, comma)] = line.substr(comma + 1);
  }
  if (kv["model"] != model_name || kv["theta"] != format_theta(theta) || kv["n_mc"] != std::to_string(n_mc) ||
      kv["seed"] != std::to_string(seed))
    return std::nullopt;
  const Eigen::Index p = std::stol(kv["p"]);
  const auto read = [&](const std::string& key) {
    Matrix m(p, p);
    std::istringstream is(kv[key]);
    std::string cell;
    for (Eigen::Index k = 0; k < p * p; ++k) {
      if (!std::getline(is, cell, ',')) throw ParseError(path + ": truncated matrix " + key);
      m(k / p, k % p) = std::stod(cell);
    }
    return m;
  };
  InfoPair info;
  info.provenance = provenance_from_string(kv["provenance"]);
  info.J = read("J");
  info.H = read("H");
  if (kv.count("J_se")) info.J_se = read("J_se");
  if (kv.count("H_se")) info.H_se = read("H_se");
  info.n_mc = n_mc;
  info.seed = seed;
  return info;
}

}  // namespace plprep
