#include "plprep/num/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "plprep/error.hpp"

namespace plprep::num {

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1e-300, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Vector sym_eigvals(const Matrix& m) {
  if (m.rows() != m.cols()) throw DomainError("sym_eigvals: matrix is not square");
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("sym_eigvals: eigensolver failed");
  Vector v = es.eigenvalues().reverse();
  return v;
}

bool is_positive_definite(const Matrix& m) {
  if (m.rows() != m.cols() || !m.allFinite()) return false;
  Eigen::LLT<Matrix> llt(symmetrize(m));
  return llt.info() == Eigen::Success;
}

std::optional<Vector> relative_eigvals(const Matrix& h, const Matrix& j) {
  if (!h.allFinite() || !j.allFinite()) return std::nullopt;
  Eigen::LLT<Matrix> llt(symmetrize(h));
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Matrix l = llt.matrixL();
  // L^{-1} J L^{-T}
  Matrix tmp = l.triangularView<Eigen::Lower>().solve(symmetrize(j));
  Matrix s = l.triangularView<Eigen::Lower>().solve(tmp.transpose());
  Vector ev = sym_eigvals(s);
  const double max_abs = ev.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < -1e-8 * max_abs) throw NumericError("relative_eigvals: H^-1 J has a negative eigenvalue");
    if (std::abs(ev[i]) < 1e-10 * max_abs || ev[i] < 0.0) ev[i] = 0.0;
  }
  return ev;
}

std::optional<double> spd_inverse_quadform(const Matrix& a, const Vector& v) {
  if (!a.allFinite()) return std::nullopt;
  Eigen::LLT<Matrix> llt(symmetrize(a));
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Vector z = llt.matrixL().solve(v);
  return z.squaredNorm();
}

std::optional<Matrix> spd_inverse(const Matrix& a) {
  if (!a.allFinite()) return std::nullopt;
  Eigen::LLT<Matrix> llt(symmetrize(a));
  if (llt.info() != Eigen::Success) return std::nullopt;
  return llt.solve(Matrix::Identity(a.rows(), a.cols()));
}

}  // namespace plprep::num
