// Ensemble-averaged dynamics of the closed-loop triaxial spinometer: the
// discrete density-matrix map, its O(theta^2) Lindblad generator, and
// relaxation to the thermal fixed point.
//
// Ordering: the ensemble increment uses the Kraus (Schrodinger) ordering
// A rho A† implied by the trajectory map, which is trace preserving for
// every alpha. The adjoint ordering printed in the source material is kept
// behind a diagnostics flag; it fails trace preservation once feedback is
// switched on, which is how the ambiguity was resolved.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "spinlab/core.hpp"
#include "spinlab/representations.hpp"
#include "spinlab/spinometer.hpp"

namespace spinlab {

// Feedback strength that makes exp(-beta t.s) stationary (|alpha| <= 1 branch).
inline double alpha_from_beta(double beta) { return -std::tanh(0.25 * beta); }

struct EnsembleMap {
  std::array<OperatorPair, 3> pairs;
  double theta = 0.0;
  double alpha = 0.0;
  Vec3 t_axis{0.0, 0.0, 1.0};

  static EnsembleMap make(const SpinSystem& sys, double theta, double alpha,
                          const Vec3& t_axis = Vec3(0, 0, 1)) {
    SpinometerConfig cfg;
    cfg.theta = theta;
    cfg.alpha = alpha;
    cfg.t_axis = normalize_axis(t_axis);
    cfg.mode = SpinometerMode::closed_loop_triaxial;
    EnsembleMap map;
    map.pairs = triaxial_operators(sys, cfg);
    map.theta = theta;
    map.alpha = alpha;
    map.t_axis = cfg.t_axis;
    for (const auto& p : map.pairs)
      if (p.completeness_residual() > 1e-12)
        throw std::runtime_error("ensemble map operators fail completeness");
    return map;
  }
};

enum class IncrementOrdering { kraus, adjoint };

// delta rho = sum_k (A_k rho A_k† + B_k rho B_k† - rho), or the adjoint
// ordering under the diagnostics flag.
inline MatrixC density_increment(const MatrixC& rho, const EnsembleMap& map,
                                 IncrementOrdering ordering = IncrementOrdering::kraus) {
  MatrixC delta = MatrixC::Zero(rho.rows(), rho.cols());
  for (const auto& p : map.pairs) {
    if (ordering == IncrementOrdering::kraus) {
      delta += p.a * rho * p.a.adjoint() + p.b * rho * p.b.adjoint() - rho;
    } else {
      delta += p.a.adjoint() * rho * p.a + p.b.adjoint() * rho * p.b - rho;
    }
  }
  return delta;
}

// Perelomov-style rates for the O(theta^2) generator:
//   gamma (nu+1) = theta^2 (1-alpha)^2,  gamma nu = theta^2 (1+alpha)^2,
// i.e. gamma = -4 alpha theta^2 and nu = -(1+alpha)^2 / (4 alpha), plus a
// dephasing weight theta^2 along the thermal axis. Detailed balance
// (nu+1)/nu = e^beta holds exactly at alpha = -tanh(beta/4).
struct LindbladParams {
  double gamma = 0.0;
  double nu = 0.0;
  double dephasing = 0.0;  // theta^2

  static LindbladParams from(double alpha, double theta) {
    LindbladParams p;
    p.gamma = -4.0 * alpha * theta * theta;
    p.nu = (alpha == 0.0) ? 0.0 : -(1.0 + alpha) * (1.0 + alpha) / (4.0 * alpha);
    p.dephasing = theta * theta;
    return p;
  }

  double lowering_rate() const { return gamma * (nu + 1.0); }  // theta^2 (1-alpha)^2
  double raising_rate() const { return gamma * nu; }           // theta^2 (1+alpha)^2
  double detailed_balance_ratio() const { return (nu + 1.0) / nu; }
};

namespace detail {

inline MatrixC dissipator(const MatrixC& op, const MatrixC& rho) {
  const MatrixC op_dag = op.adjoint();
  const MatrixC norm_op = op_dag * op;
  return op * rho * op_dag - 0.5 * (norm_op * rho + rho * norm_op);
}

// Orthonormal transverse pair completing t into a right-handed frame.
inline std::pair<Vec3, Vec3> transverse_frame(const Vec3& t) {
  const Vec3 seed = (std::abs(t[0]) < 0.9) ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
  const Vec3 u = (seed - seed.dot(t) * t).normalized();
  return {u, Vec3(t.cross(u))};
}

}  // namespace detail

// Three-line generator: gamma(nu+1) D[s-] + gamma nu D[s+] + theta^2 D[s_t],
// with s± = (s1' ± i s2')/sqrt(2) in the frame whose third axis is t.
inline MatrixC lindblad_increment(const MatrixC& rho, const SpinSystem& sys,
                                  const LindbladParams& params,
                                  const Vec3& t_axis = Vec3(0, 0, 1)) {
  const Vec3 t = normalize_axis(t_axis);
  const auto [u, v] = detail::transverse_frame(t);
  const MatrixC s1p = sys.axis_operator(u);
  const MatrixC s2p = sys.axis_operator(v);
  const MatrixC s_minus = (s1p - kI * s2p) / std::sqrt(2.0);
  const MatrixC s_plus = (s1p + kI * s2p) / std::sqrt(2.0);
  const MatrixC s_t = sys.axis_operator(t);
  return params.lowering_rate() * detail::dissipator(s_minus, rho) +
         params.raising_rate() * detail::dissipator(s_plus, rho) +
         params.dephasing * detail::dissipator(s_t, rho);
}

// Normalized trace distance: half the absolute-eigenvalue sum of the
// difference of the unit-trace versions of a and b.
inline double trace_distance(const MatrixC& a, const MatrixC& b) {
  const MatrixC diff = a / a.trace() - b / b.trace();
  Eigen::SelfAdjointEigenSolver<MatrixC> es(diff);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

struct StationaryResult {
  DensityMatrix rho;
  long iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

// Plain relaxation rho += delta(rho) until ||delta||_max < tol.
inline StationaryResult evolve_to_stationary(const MatrixC& rho0, const EnsembleMap& map,
                                             double tol = 1e-10, long max_iters = 2000000) {
  StationaryResult out;
  MatrixC rho = rho0;
  for (long it = 0; it < max_iters; ++it) {
    const MatrixC delta = density_increment(rho, map);
    out.residual = max_abs(delta) / std::max(1.0, max_abs(rho));
    if (out.residual < tol) {
      out.iterations = it;
      out.converged = true;
      out.rho.matrix = rho;
      out.rho.normalized = false;
      return out;
    }
    rho += delta;
  }
  out.iterations = max_iters;
  out.converged = false;
  out.rho.matrix = rho;
  out.rho.normalized = false;
  return out;
}

}  // namespace spinlab
