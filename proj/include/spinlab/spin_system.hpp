// Exact finite-dimensional spin-j algebra: generator matrices, Euler-angle
// rotations, coherent states, and the quadrature identities they satisfy.
//
// Basis convention everywhere: |j,m> ordered m = +j ... -j, so s3 is
// diagonal-descending and thermal weights read e^{-beta m} top to bottom.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "spinlab/core.hpp"
#include "spinlab/quadrature.hpp"
#include "spinlab/special_functions.hpp"

namespace spinlab {

struct PureState {
  VectorC amplitudes;

  int dim() const { return static_cast<int>(amplitudes.size()); }
  double norm() const { return amplitudes.norm(); }
  void normalize() { amplitudes /= amplitudes.norm(); }

  cx expectation(const MatrixC& op) const {
    return amplitudes.dot(op * amplitudes);  // dot() conjugates the left side
  }
  double real_expectation(const MatrixC& op) const { return expectation(op).real(); }
};

struct SpinSystem {
  double j = 0.0;
  int dim = 0;
  std::array<MatrixC, 3> s;  // s[0], s[1], s[2] = s1, s2, s3

  const MatrixC& s1() const { return s[0]; }
  const MatrixC& s2() const { return s[1]; }
  const MatrixC& s3() const { return s[2]; }

  // n . s for an arbitrary real vector n.
  MatrixC axis_operator(const Vec3& n) const { return n[0] * s[0] + n[1] * s[1] + n[2] * s[2]; }

  // k-th component of (t x s); Hermitian for real t.
  MatrixC cross_operator(const Vec3& t, int k) const {
    const int a = (k + 1) % 3, b = (k + 2) % 3;
    return t[a] * s[b] - t[b] * s[a];
  }

  double m_of_index(int i) const { return j - i; }
};

inline SpinSystem build_spin_system(double j) {
  const int dim = spin_dimension(j);  // validates j
  SpinSystem sys;
  sys.j = j;
  sys.dim = dim;
  MatrixC sp = MatrixC::Zero(dim, dim);  // ladder s+ = s1 + i s2
  MatrixC sz = MatrixC::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    const double m = j - i;
    sz(i, i) = m;
    if (i >= 1) {
      // <j,m+1| s+ |j,m> with m = j - i
      sp(i - 1, i) = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
    }
  }
  const MatrixC sm = sp.adjoint();
  sys.s[0] = 0.5 * (sp + sm);
  sys.s[1] = -0.5 * kI * (sp - sm);
  sys.s[2] = sz;
  return sys;
}

// Euler rotation D(phi, theta, psi) = e^{-i phi s3} e^{-i theta s2} e^{-i psi s3}.
inline MatrixC rotation(const SpinSystem& sys, double phi, double theta, double psi) {
  if (!std::isfinite(phi) || !std::isfinite(theta) || !std::isfinite(psi))
    throw std::invalid_argument("rotation angles must be finite");
  VectorC left(sys.dim), right(sys.dim);
  for (int i = 0; i < sys.dim; ++i) {
    const double m = sys.m_of_index(i);
    left[i] = std::polar(1.0, -phi * m);
    right[i] = std::polar(1.0, -psi * m);
  }
  const MatrixC mid = unitary_from_hermitian(sys.s2(), -theta);
  return left.asDiagonal() * mid * right.asDiagonal();
}

struct CoherentState {
  Vec3 axis;
  PureState state;
};

// Normalized spin vector x = <s>/j.
inline Vec3 spin_vector(const PureState& psi, const SpinSystem& sys) {
  Vec3 x;
  for (int k = 0; k < 3; ++k) x[k] = psi.real_expectation(sys.s[k]) / sys.j;
  return x;
}

// Closed-form coherent amplitudes <j,m|xhat>:
//   binom(2j, j-m)^{1/2} e^{-i m phi} cos^{j+m}(theta/2) sin^{j-m}(theta/2).
inline cx coherent_amplitude(double j, double m, double cos_half, double sin_half,
                             double phi) {
  const double mag = sqrt_binomial(2.0 * j, j - m) * std::pow(cos_half, j + m) *
                     std::pow(sin_half, j - m);
  return mag * std::polar(1.0, -m * phi);
}

inline CoherentState coherent_state(const SpinSystem& sys, const Vec3& axis_in) {
  const Vec3 axis = normalize_axis(axis_in);
  const double z = std::clamp(axis[2], -1.0, 1.0);
  const double phi = std::atan2(axis[1], axis[0]);
  const double cos_half = std::sqrt(0.5 * (1.0 + z));
  const double sin_half = std::sqrt(0.5 * (1.0 - z));
  PureState psi;
  psi.amplitudes.resize(sys.dim);
  for (int i = 0; i < sys.dim; ++i)
    psi.amplitudes[i] = coherent_amplitude(sys.j, sys.m_of_index(i), cos_half, sin_half, phi);
  psi.normalize();  // closed form is unit-norm; this removes rounding drift
  return {axis, psi};
}

// <psi| s_k s_l |psi> on a coherent state, by direct matrix evaluation.
// Axis indices are 0-based.
inline cx coherent_second_moment(const SpinSystem& sys, const CoherentState& cs, int k, int l) {
  if (k < 0 || k > 2 || l < 0 || l > 2) throw std::invalid_argument("axis index must be 0..2");
  return cs.state.amplitudes.dot(sys.s[k] * (sys.s[l] * cs.state.amplitudes));
}

// Closed form for the same moment:
//   (1/2) j delta_kl + j(j - 1/2) x_k x_l + (i/2) j eps_klm x_m.
// The antisymmetric part carries the factor j so that
// sigma_kl - sigma_lk = i eps_klm j x_m; validated against the direct
// evaluation in the test suite (the j = 1/2 case pins it down).
inline cx coherent_second_moment_closed_form(double j, const Vec3& x, int k, int l) {
  double eps = 0.0;
  int m = 3 - k - l;
  if (k != l) {
    const int perm[3] = {k, l, m};
    // sign of the permutation (k, l, m) of (0, 1, 2)
    eps = ((perm[0] == 0 && perm[1] == 1) || (perm[0] == 1 && perm[1] == 2) ||
           (perm[0] == 2 && perm[1] == 0))
              ? 1.0
              : -1.0;
  }
  cx val = 0.5 * j * (k == l ? 1.0 : 0.0) + j * (j - 0.5) * x[k] * x[l];
  if (k != l) val += 0.5 * kI * j * eps * x[m];
  return val;
}

// || (2j+1)/(4 pi) \oint d^2x |x><x|  -  I ||_max under the given rule.
inline double resolution_of_identity_check(const SpinSystem& sys, const SphereQuadrature& quad) {
  MatrixC acc = MatrixC::Zero(sys.dim, sys.dim);
  quad.for_each_node([&](const Vec3& xhat, double, double, double w) {
    const CoherentState cs = coherent_state(sys, xhat);
    acc.noalias() += w * (cs.state.amplitudes * cs.state.amplitudes.adjoint());
  });
  acc *= (2.0 * sys.j + 1.0) / (4.0 * kPi);
  return max_abs(MatrixC(acc - MatrixC::Identity(sys.dim, sys.dim)));
}

// || \oint d^2x Y_l^m(x) |x><x| ||_max, which vanishes for l > 2j.
// The integrand is a z-polynomial of degree <= 2j + l after the phi sum,
// and carries phi harmonics up to |m| + 2j.
inline double spherical_harmonic_null_check(const SpinSystem& sys, int l, int m) {
  if (std::abs(m) > l) throw std::invalid_argument("|m| must be <= l");
  if (l <= 2.0 * sys.j)
    throw std::invalid_argument("null identity only claimed for l > 2j");
  const int two_j = static_cast<int>(std::lround(2.0 * sys.j));
  const auto quad = SphereQuadrature::exact_for(two_j + l, std::abs(m) + two_j);
  MatrixC acc = MatrixC::Zero(sys.dim, sys.dim);
  quad.for_each_node([&](const Vec3& xhat, double z, double phi, double w) {
    const CoherentState cs = coherent_state(sys, xhat);
    const cx y = spherical_harmonic(l, m, z, phi);
    acc.noalias() += (w * y) * (cs.state.amplitudes * cs.state.amplitudes.adjoint());
  });
  return max_abs(acc);
}

}  // namespace spinlab
