// Discrete Markov-chain measurement engine: open-loop uniaxial / triaxial
// spinometers, the closed-loop variant with unitary feedback, and the
// variance / covariance einselection diagnostics.
//
// Feedback convention: the +1 branch applies exp(-i alpha theta (t x s)_k),
// the -1 branch its inverse. The feedback angle is proportional to the
// measurement strength theta; with that scaling the ensemble map has the
// thermal operator as an O(theta^4)-accurate fixed point at
// alpha = -tanh(beta/4), and the drift/diffusion limit comes out with
// alpha appearing at the same order as the measurement terms.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "spinlab/core.hpp"
#include "spinlab/rng.hpp"
#include "spinlab/spin_system.hpp"

namespace spinlab {

enum class SpinometerMode { uniaxial, triaxial, closed_loop_triaxial };

struct SpinometerConfig {
  double theta = 0.1;
  double alpha = 0.0;
  Vec3 t_axis{0.0, 0.0, 1.0};
  SpinometerMode mode = SpinometerMode::triaxial;
  int uniaxial_generator = 2;  // 0-based axis index, used in uniaxial mode

  void validate() const {
    if (!(theta > 0.0 && theta <= 0.5))
      throw std::invalid_argument("theta must lie in (0, 0.5]; the small-angle "
                                  "expansion is meaningless beyond that");
    if (!std::isfinite(alpha)) throw std::invalid_argument("alpha must be finite");
    if (std::abs(t_axis.norm() - 1.0) > 1e-9)
      throw std::invalid_argument("t axis must be a unit vector");
    if (uniaxial_generator < 0 || uniaxial_generator > 2)
      throw std::invalid_argument("generator index must be 0..2");
  }
};

struct OperatorPair {
  MatrixC a;
  MatrixC b;

  double completeness_residual() const {
    const MatrixC sum = a.adjoint() * a + b.adjoint() * b;
    return max_abs(MatrixC(sum - MatrixC::Identity(sum.rows(), sum.cols())));
  }
};

// A = [cos(theta s) + sin(theta s)]/sqrt(2), B = [cos - sin]/sqrt(2).
inline OperatorPair increment_operators(const MatrixC& generator, double theta) {
  if (!is_hermitian(generator, 1e-12))
    throw std::invalid_argument("spinometer generator must be Hermitian");
  Eigen::SelfAdjointEigenSolver<MatrixC> es(generator);
  const auto& lam = es.eigenvalues();
  const MatrixC& v = es.eigenvectors();
  VectorC da(lam.size()), db(lam.size());
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < lam.size(); ++i) {
    const double c = std::cos(theta * lam[i]);
    const double s = std::sin(theta * lam[i]);
    da[i] = (c + s) * inv_sqrt2;
    db[i] = (c - s) * inv_sqrt2;
  }
  OperatorPair pair;
  pair.a = v * da.asDiagonal() * v.adjoint();
  pair.b = v * db.asDiagonal() * v.adjoint();
  return pair;
}

// Closed-loop pair for generator k: unitary feedback prefactors
// exp(∓ i alpha theta (t x s)_k) on the open-loop A/B.
inline OperatorPair closed_loop_operators(const SpinSystem& sys, const SpinometerConfig& cfg,
                                          int k) {
  cfg.validate();
  OperatorPair open = increment_operators(sys.s[k], cfg.theta);
  if (cfg.alpha == 0.0) return open;
  const MatrixC h = sys.cross_operator(cfg.t_axis, k);
  const MatrixC u_plus = unitary_from_hermitian(h, -cfg.alpha * cfg.theta);
  OperatorPair pair;
  pair.a = u_plus * open.a;
  pair.b = u_plus.adjoint() * open.b;
  return pair;
}

// The three generator pairs used by one triaxial macro-step.
inline std::array<OperatorPair, 3> triaxial_operators(const SpinSystem& sys,
                                                      const SpinometerConfig& cfg) {
  const bool feedback = cfg.mode == SpinometerMode::closed_loop_triaxial;
  SpinometerConfig open = cfg;
  open.alpha = feedback ? cfg.alpha : 0.0;
  return {closed_loop_operators(sys, open, 0), closed_loop_operators(sys, open, 1),
          closed_loop_operators(sys, open, 2)};
}

struct StepResult {
  PureState state;
  int outcome = 0;     // +1 for the A branch, -1 for B
  double p_plus = 0.0; // branch probability that was compared against the draw
};

inline StepResult step(const PureState& psi, const OperatorPair& ops, double draw) {
  const VectorC a_psi = ops.a * psi.amplitudes;
  const VectorC b_psi = ops.b * psi.amplitudes;
  const double p_a = a_psi.squaredNorm();
  const double p_b = b_psi.squaredNorm();
  if (std::abs(p_a + p_b - 1.0) > 1e-12)
    throw std::runtime_error("branch probabilities do not sum to one; "
                             "operators are not a complete pair");
  StepResult out;
  out.p_plus = p_a;
  if (draw < p_a) {
    if (p_a < 1e-300) throw std::runtime_error("degenerate branch normalization");
    out.state.amplitudes = a_psi / std::sqrt(p_a);
    out.outcome = +1;
  } else {
    if (p_b < 1e-300) throw std::runtime_error("degenerate branch normalization");
    out.state.amplitudes = b_psi / std::sqrt(p_b);
    out.outcome = -1;
  }
  return out;
}

inline double variance(const PureState& psi, const MatrixC& generator) {
  const VectorC g_psi = generator * psi.amplitudes;
  const double second = g_psi.squaredNorm();           // <s^2> for Hermitian s
  const double first = psi.amplitudes.dot(g_psi).real();
  return second - first * first;
}

// Exact one-step expected variance change, enumerated over both branches.
// Small-theta law: -4 theta^2 Delta^2 with an O(theta^4) remainder (the
// branch sum is even in theta).
inline double variance_increment_exact(const PureState& psi, const OperatorPair& ops,
                                       const MatrixC& generator) {
  const VectorC a_psi = ops.a * psi.amplitudes;
  const VectorC b_psi = ops.b * psi.amplitudes;
  const double p_a = a_psi.squaredNorm();
  const double p_b = b_psi.squaredNorm();
  double acc = -variance(psi, generator);
  if (p_a > 1e-300) {
    PureState branch{a_psi / std::sqrt(p_a)};
    acc += p_a * variance(branch, generator);
  }
  if (p_b > 1e-300) {
    PureState branch{b_psi / std::sqrt(p_b)};
    acc += p_b * variance(branch, generator);
  }
  return acc;
}

// Complex spin covariance sigma_kl = <s_k s_l> - <s_k><s_l> (Hermitian 3x3).
inline Mat3c spin_covariance(const PureState& psi, const SpinSystem& sys) {
  std::array<VectorC, 3> s_psi;
  Vec3 mean;
  for (int k = 0; k < 3; ++k) {
    s_psi[k] = sys.s[k] * psi.amplitudes;
    mean[k] = psi.amplitudes.dot(s_psi[k]).real();
  }
  Mat3c sigma;
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l)
      sigma(k, l) = s_psi[k].dot(s_psi[l]) - mean[k] * mean[l];
  return sigma;
}

// tr(sigma . sigma*): zero exactly on coherent states, positive otherwise.
inline double tr_sigma_sigma_star(const Mat3c& sigma) {
  cx acc = 0.0;
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) acc += sigma(k, l) * sigma(k, l);
  return acc.real();
}

// Rotation taking unit vector v to +z (identity for degenerate v).
inline Mat3 rotation_to_z(const Vec3& v) {
  const double c = v[2];
  const Vec3 axis(v[1], -v[0], 0.0);  // v x z
  const double s2 = axis.squaredNorm();
  if (s2 < 1e-24) {
    if (c > 0.0) return Mat3::Identity();
    Mat3 flip = Mat3::Identity();
    flip(1, 1) = -1.0;
    flip(2, 2) = -1.0;
    return flip;  // pi rotation about x
  }
  Mat3 cross;
  cross << 0.0, -axis[2], axis[1], axis[2], 0.0, -axis[0], -axis[1], axis[0], 0.0;
  return Mat3::Identity() + cross + cross * cross * ((1.0 - c) / s2);
}

// Covariance decomposition in the frame rotated so the spin vector points
// along +z. The six nonnegative terms reassemble tr(sigma sigma*) exactly:
//
//   tr(sigma sigma*) = p_a + 2 p_b + p_c/2 + j p_d + p_d^2/2 + p_e/2 + p_f/2
//   tr(sbar . sbar)  = j^2/2 + p_a + 2 p_b + p_c/2 + j p_d + p_d^2/2
//
// with p_a the squared axial variance, p_b the squared off-diagonal
// covariances, p_c the squared transverse anisotropy, p_d = j^2 - <s_3^2>
// the axial second-moment gap, p_e the squared Casimir-closure residual
// (identically zero on physical states; kept as a consistency probe), and
// p_f = j^2 (1 - x_3^2) the polar gap. p_d and p_f vanish together exactly
// on coherent states.
struct CovarianceDiagnostics {
  Mat3c sigma;          // lab frame, complex
  Mat3 sigma_bar;       // symmetric part, lab frame
  Mat3 sigma_bar_rot;   // symmetric part in the x -> (0,0,|x|) frame
  Vec3 x;               // <s>/j, lab frame
  double x3 = 0.0;      // |x|
  double p_a = 0.0, p_b = 0.0, p_c = 0.0, p_d = 0.0, p_e = 0.0, p_f = 0.0;
  double tr_ss_star = 0.0;
  double tr_sbar_sbar = 0.0;
  double reassembly = 0.0;  // right-hand side of the first identity
};

inline CovarianceDiagnostics covariance_diagnostics(const PureState& psi,
                                                    const SpinSystem& sys) {
  CovarianceDiagnostics d;
  const double j = sys.j;
  d.sigma = spin_covariance(psi, sys);
  d.sigma_bar = 0.5 * (d.sigma + d.sigma.transpose()).real();
  d.x = spin_vector(psi, sys);
  d.x3 = d.x.norm();
  const Mat3 rot = (d.x3 < 1e-12) ? Mat3::Identity() : rotation_to_z(Vec3(d.x / d.x3));
  d.sigma_bar_rot = rot * d.sigma_bar * rot.transpose();

  const Mat3& sb = d.sigma_bar_rot;
  const double axial_moment = sb(2, 2) + j * j * d.x3 * d.x3;  // <s_3^2> in the frame
  d.p_a = sb(2, 2) * sb(2, 2);
  d.p_b = sb(0, 1) * sb(0, 1) + sb(0, 2) * sb(0, 2) + sb(1, 2) * sb(1, 2);
  d.p_c = (sb(0, 0) - sb(1, 1)) * (sb(0, 0) - sb(1, 1));
  d.p_d = j * j - axial_moment;
  const double casimir_residual = sb.trace() + j * j * d.x3 * d.x3 - j * (j + 1.0);
  d.p_e = casimir_residual * casimir_residual;
  d.p_f = j * j * (1.0 - d.x3 * d.x3);

  d.tr_ss_star = tr_sigma_sigma_star(d.sigma);
  d.tr_sbar_sbar = d.sigma_bar.cwiseProduct(d.sigma_bar).sum();
  d.reassembly = d.p_a + 2.0 * d.p_b + 0.5 * d.p_c + j * d.p_d + 0.5 * d.p_d * d.p_d +
                 0.5 * d.p_e + 0.5 * d.p_f;

  const double scale = std::max(1.0, j * j * j * j);
  if (std::abs(d.tr_ss_star - d.reassembly) > 1e-9 * scale)
    throw std::logic_error("covariance decomposition identity violated");
  return d;
}

// Exact one-step expectation of the net covariance increment
// sum_k { E_k[tr sigma'] - tr sigma } over the three generators, each
// enumerated over both branches. Feedback rotations leave every term
// unchanged (tr sigma and tr sigma sigma* are rotation scalars).
inline double triaxial_increment_exact(const PureState& psi, const SpinSystem& sys,
                                       const SpinometerConfig& cfg) {
  const auto ops = triaxial_operators(sys, cfg);
  auto tr_sigma = [&](const PureState& s) {
    // tr sigma = j(j+1) - j^2 |x|^2, exact on unit-norm states
    const Vec3 x = spin_vector(s, sys);
    return sys.j * (sys.j + 1.0) - sys.j * sys.j * x.squaredNorm();
  };
  const double base = tr_sigma(psi);
  double acc = 0.0;
  for (int k = 0; k < 3; ++k) {
    const VectorC a_psi = ops[k].a * psi.amplitudes;
    const VectorC b_psi = ops[k].b * psi.amplitudes;
    const double p_a = a_psi.squaredNorm();
    const double p_b = b_psi.squaredNorm();
    if (p_a > 1e-300) acc += p_a * tr_sigma(PureState{a_psi / std::sqrt(p_a)});
    if (p_b > 1e-300) acc += p_b * tr_sigma(PureState{b_psi / std::sqrt(p_b)});
    acc -= base;
  }
  return acc;
}

// Squared overlap with the coherent state along the current spin direction.
inline double nearest_coherent_overlap(const PureState& psi, const SpinSystem& sys) {
  const Vec3 x = spin_vector(psi, sys);
  if (x.norm() < 1e-12) return 0.0;
  const auto cs = coherent_state(sys, x);
  return std::norm(cs.state.amplitudes.dot(psi.amplitudes));
}

struct TrajectoryOptions {
  long record_stride = 0;   // 0: record only the final snapshot
  bool store_states = false;
  long completeness_check_stride = 256;
};

struct TrajectorySnapshot {
  long step = 0;
  Vec3 x{0, 0, 0};
  std::array<int, 3> data{0, 0, 0};  // uniaxial mode fills data[0]
  double variance = 0.0;             // uniaxial: Delta(generator)
  double tr_ss_star = 0.0;           // triaxial modes: tr sigma sigma*
  PureState state;                   // filled only when store_states is set
};

struct TrajectoryRecord {
  std::vector<TrajectorySnapshot> snapshots;
  PureState final_state;
  Vec3 final_x{0, 0, 0};
  long steps = 0;
};

// Deterministic given (master_seed, trajectory_id): one counter stream per
// trajectory, one uniform per branch decision, strictly sequential.
inline TrajectoryRecord run_trajectory(const SpinSystem& sys, const SpinometerConfig& cfg,
                                       const PureState& initial, long n_steps,
                                       std::uint64_t master_seed, std::uint64_t trajectory_id,
                                       const TrajectoryOptions& opt = {}) {
  cfg.validate();
  if (std::abs(initial.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("initial state must be unit norm");

  const bool uniaxial = cfg.mode == SpinometerMode::uniaxial;
  const auto pairs = triaxial_operators(sys, cfg);
  const OperatorPair* uni_pair = &pairs[cfg.uniaxial_generator];

  CounterRng rng(master_seed, trajectory_id);
  TrajectoryRecord rec;
  PureState psi = initial;
  psi.normalize();

  VectorC work_a(sys.dim), work_b(sys.dim);
  auto substep = [&](const OperatorPair& ops, bool check) -> int {
    work_a.noalias() = ops.a * psi.amplitudes;
    const double p_a = work_a.squaredNorm();
    if (check) {
      work_b.noalias() = ops.b * psi.amplitudes;
      if (std::abs(p_a + work_b.squaredNorm() - 1.0) > 1e-12)
        throw std::runtime_error("branch probabilities do not sum to one");
    }
    const double u = rng.uniform();
    if (u < p_a) {
      if (p_a < 1e-300) throw std::runtime_error("degenerate branch normalization");
      psi.amplitudes = work_a / std::sqrt(p_a);
      return +1;
    }
    work_b.noalias() = ops.b * psi.amplitudes;
    const double p_b = work_b.squaredNorm();
    if (p_b < 1e-300) throw std::runtime_error("degenerate branch normalization");
    psi.amplitudes = work_b / std::sqrt(p_b);
    return -1;
  };

  auto snapshot = [&](long n, const std::array<int, 3>& data) {
    TrajectorySnapshot snap;
    snap.step = n;
    snap.x = spin_vector(psi, sys);
    snap.data = data;
    if (uniaxial) {
      snap.variance = variance(psi, sys.s[cfg.uniaxial_generator]);
    } else {
      snap.tr_ss_star = tr_sigma_sigma_star(spin_covariance(psi, sys));
    }
    if (opt.store_states) snap.state = psi;
    rec.snapshots.push_back(std::move(snap));
  };

  for (long n = 0; n < n_steps; ++n) {
    const bool check = opt.completeness_check_stride > 0 &&
                       (n % opt.completeness_check_stride == 0);
    std::array<int, 3> data{0, 0, 0};
    if (uniaxial) {
      data[0] = substep(*uni_pair, check);
    } else {
      for (int k = 0; k < 3; ++k) data[k] = substep(pairs[k], check);
    }
    if (opt.record_stride > 0 && ((n + 1) % opt.record_stride == 0)) snapshot(n + 1, data);
  }

  rec.final_state = psi;
  rec.final_x = spin_vector(psi, sys);
  rec.steps = n_steps;
  return rec;
}

}  // namespace spinlab
