// Shared aliases, small numeric helpers, and error types used across spinlab.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace spinlab {

using cx = std::complex<double>;
using MatrixC = Eigen::MatrixXcd;
using VectorC = Eigen::VectorXcd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat3c = Eigen::Matrix3cd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cx kI{0.0, 1.0};

// Thrown when an iterative scheme (quadrature doubling, fixed-point
// relaxation, series summation) fails to stabilize within its budget.
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// j must be a nonnegative half-integer: 2j in {0, 1, 2, ...}.
inline bool is_half_integer_spin(double j) {
  if (!(j >= 0.0) || !std::isfinite(j)) return false;
  const double two_j = 2.0 * j;
  return std::abs(two_j - std::round(two_j)) < 1e-9;
}

inline int spin_dimension(double j) {
  if (!is_half_integer_spin(j))
    throw std::invalid_argument("spin j must be a nonnegative half-integer, got " +
                                std::to_string(j));
  return static_cast<int>(std::lround(2.0 * j)) + 1;
}

inline double max_abs(const MatrixC& m) { return m.cwiseAbs().maxCoeff(); }
inline double max_abs(const VectorC& v) { return v.cwiseAbs().maxCoeff(); }

// Renormalizes an axis vector; rejects (near-)zero input.
inline Vec3 normalize_axis(const Vec3& v) {
  const double n = v.norm();
  if (n < 1e-12) throw std::invalid_argument("axis vector must be nonzero");
  return v / n;
}

// Unitary exp(i * factor * H) for Hermitian H, via eigendecomposition.
inline MatrixC unitary_from_hermitian(const MatrixC& h, double factor) {
  Eigen::SelfAdjointEigenSolver<MatrixC> es(h);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed");
  const auto& lam = es.eigenvalues();
  const MatrixC& v = es.eigenvectors();
  VectorC phases(lam.size());
  for (int i = 0; i < lam.size(); ++i)
    phases[i] = std::polar(1.0, factor * lam[i]);
  return v * phases.asDiagonal() * v.adjoint();
}

// exp(factor * H) for Hermitian H (real spectrum).
inline MatrixC exp_hermitian(const MatrixC& h, double factor) {
  Eigen::SelfAdjointEigenSolver<MatrixC> es(h);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed");
  const auto& lam = es.eigenvalues();
  const MatrixC& v = es.eigenvectors();
  VectorC scale(lam.size());
  for (int i = 0; i < lam.size(); ++i) scale[i] = std::exp(factor * lam[i]);
  return v * scale.asDiagonal() * v.adjoint();
}

inline bool is_hermitian(const MatrixC& m, double tol = 1e-12) {
  return max_abs(MatrixC(m - m.adjoint())) <= tol * std::max(1.0, max_abs(m));
}

}  // namespace spinlab
