// Thermal operator, its Q- and positive P-sequences, and quadrature
// reconstruction checks.
//
// Convention: DensityMatrix carries the *unnormalized* thermal operator
// exp(-beta t.s) so matrix elements read e^{-beta m}; callers who need a
// unit-trace state take normalized(). Fixed-point algebra uses the
// unnormalized form, trace-distance comparisons the normalized one.
#pragma once

#include <cmath>
#include <stdexcept>

#include "spinlab/core.hpp"
#include "spinlab/quadrature.hpp"
#include "spinlab/special_functions.hpp"
#include "spinlab/spin_system.hpp"

namespace spinlab {

struct ThermalSpec {
  double beta = 0.0;
  Vec3 t_axis{0.0, 0.0, 1.0};

  ThermalSpec(double beta_, const Vec3& axis) : beta(beta_), t_axis(normalize_axis(axis)) {
    if (!(beta >= 0.0) || !std::isfinite(beta))
      throw std::invalid_argument("beta must be finite and >= 0");
  }
};

struct DensityMatrix {
  MatrixC matrix;
  bool normalized = false;

  double trace() const { return matrix.trace().real(); }

  DensityMatrix normalized_view() const {
    DensityMatrix out;
    out.matrix = matrix / trace();
    out.normalized = true;
    return out;
  }

  // Hermiticity / positivity / trace sanity; tolerances per the type contract.
  void validate() const {
    if (!is_hermitian(matrix, 1e-12)) throw std::runtime_error("density matrix not Hermitian");
    Eigen::SelfAdjointEigenSolver<MatrixC> es(matrix);
    if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, es.eigenvalues().maxCoeff()))
      throw std::runtime_error("density matrix has a negative eigenvalue");
    if (!(trace() > 0.0)) throw std::runtime_error("density matrix trace must be positive");
  }
};

// rho_th = exp(-beta t.s), unnormalized (matches the e^{-beta m} readout).
inline DensityMatrix thermal_operator(const SpinSystem& sys, const ThermalSpec& spec) {
  DensityMatrix rho;
  rho.matrix = exp_hermitian(sys.axis_operator(spec.t_axis), -spec.beta);
  rho.normalized = false;
  return rho;
}

// Q_j(x) = (cosh(beta/2) - x.t sinh(beta/2))^{2j}.
inline double q_value(double j, const ThermalSpec& spec, const Vec3& xhat_in) {
  const Vec3 xhat = normalize_axis(xhat_in);
  const double c = std::cosh(0.5 * spec.beta);
  const double s = std::sinh(0.5 * spec.beta);
  return std::pow(c - xhat.dot(spec.t_axis) * s, 2.0 * j);
}

// Normalization coefficient of the positive P-sequence,
//   c_j = 2 sinh((j+1/2) beta) / (Q^{-1}_{j+1/2}(t) - Q^{-1}_{j+1/2}(-t)),
// evaluated literally; the beta -> 0 limit is 1. (The expression simplifies
// to 1 for every (j, beta); both computation paths are asserted to agree in
// the tests rather than hard-coding the simplification.)
inline double c_normalization(double j, const ThermalSpec& spec) {
  if (spec.beta < 1e-12) return 1.0;
  const double qt = q_value(j + 0.5, spec, spec.t_axis);
  const double qmt = q_value(j + 0.5, spec, -spec.t_axis);
  return 2.0 * std::sinh((j + 0.5) * spec.beta) / (1.0 / qt - 1.0 / qmt);
}

// Positive P-sequence of the thermal operator: P_j(x) = c_j / Q_{j+1}(-x).
inline double p_value(double j, const ThermalSpec& spec, const Vec3& xhat_in) {
  const Vec3 xhat = normalize_axis(xhat_in);
  const double c = std::cosh(0.5 * spec.beta);
  const double s = std::sinh(0.5 * spec.beta);
  return c_normalization(j, spec) * std::pow(c + xhat.dot(spec.t_axis) * s, -(2.0 * j + 2.0));
}

// (2j+1)/(4 pi) \oint d^2x P_j(x) |x><x| by doubling quadrature.
// P_j is rational in z (and in cos/sin phi for a tilted axis), so both grid
// directions are refined until the result stabilizes.
inline DensityMatrix reconstruct_rho_from_p(const SpinSystem& sys, const ThermalSpec& spec,
                                            int start_order = 16, int max_order = 4096,
                                            double tol = 1e-12) {
  const int two_j = static_cast<int>(std::lround(2.0 * sys.j));
  auto eval = [&](int n) {
    const int n_phi = std::max(2 * two_j + 2, n);
    const auto quad = SphereQuadrature::make(n, n_phi);
    MatrixC acc = MatrixC::Zero(sys.dim, sys.dim);
    quad.for_each_node([&](const Vec3& xhat, double, double, double w) {
      const auto cs = coherent_state(sys, xhat);
      acc.noalias() +=
          (w * p_value(sys.j, spec, xhat)) * (cs.state.amplitudes * cs.state.amplitudes.adjoint());
    });
    return MatrixC(acc * (2.0 * sys.j + 1.0) / (4.0 * kPi));
  };
  const auto res = converge_by_doubling(eval, start_order, max_order, tol);
  DensityMatrix rho;
  rho.matrix = res.value;
  rho.normalized = false;
  return rho;
}

// |LHS - RHS| of the matrix-element condition
//   e^{-beta m} delta_mm' = (2j+1)/(4pi) \oint P_j <j,m|x><x|j,m'>,
// for the thermal axis along +z. Indices are the physical m values.
inline double matrix_element_check(const SpinSystem& sys, const ThermalSpec& spec, double m,
                                   double m_prime) {
  if ((spec.t_axis - Vec3(0, 0, 1)).norm() > 1e-12)
    throw std::invalid_argument("matrix_element_check requires t = +z");
  const int i = static_cast<int>(std::lround(sys.j - m));
  const int ip = static_cast<int>(std::lround(sys.j - m_prime));
  if (i < 0 || i >= sys.dim || ip < 0 || ip >= sys.dim)
    throw std::invalid_argument("m indices out of range");
  auto eval = [&](int n) {
    const int two_j = static_cast<int>(std::lround(2.0 * sys.j));
    const auto quad = SphereQuadrature::make(n, 2 * two_j + 2);
    cx acc = 0.0;
    quad.for_each_node([&](const Vec3& xhat, double, double, double w) {
      const auto cs = coherent_state(sys, xhat);
      acc += w * p_value(sys.j, spec, xhat) * cs.state.amplitudes[i] *
             std::conj(cs.state.amplitudes[ip]);
    });
    MatrixC out(1, 1);
    out(0, 0) = acc * (2.0 * sys.j + 1.0) / (4.0 * kPi);
    return out;
  };
  const cx rhs = converge_by_doubling(eval, 16, 4096).value(0, 0);
  const cx lhs = (i == ip) ? cx(std::exp(-spec.beta * m), 0.0) : cx(0.0, 0.0);
  return std::abs(lhs - rhs);
}

// Residual of the hypergeometric identity
//   2F1(2+2j, 1+j+m; 2+2j, z) = (1-z)^{-(j+m+1)}.
inline double hypergeometric_identity_check(double j, double m, double z) {
  const double lhs = hyp2f1_series(2.0 + 2.0 * j, 1.0 + j + m, 2.0 + 2.0 * j, z);
  const double rhs = std::pow(1.0 - z, -(j + m + 1.0));
  return std::abs(lhs - rhs);
}

}  // namespace spinlab
