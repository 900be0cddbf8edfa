#pragma once

#include <Eigen/Dense>
#include <optional>

namespace plprep {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace num {

bool is_symmetric(const Matrix& m, double rel_tol = 1e-12);

Matrix symmetrize(const Matrix& m);

// Eigenvalues of a symmetric matrix, descending.
Vector sym_eigvals(const Matrix& m);

bool is_positive_definite(const Matrix& m);

// Spectrum of H^{-1} J through the symmetric form L^{-1} J L^{-T}, H = L L^T.
// Returns nullopt when H is not positive definite. Eigenvalues below
// 1e-10 max|l| in magnitude are clipped to zero; a value below -1e-8 max|l|
// raises NumericError.
std::optional<Vector> relative_eigvals(const Matrix& h, const Matrix& j);

// v^T A^{-1} v for symmetric positive definite A; nullopt otherwise.
std::optional<double> spd_inverse_quadform(const Matrix& a, const Vector& v);

// A^{-1} for symmetric positive definite A; nullopt otherwise.
std::optional<Matrix> spd_inverse(const Matrix& a);

}  // namespace num
}  // namespace plprep
