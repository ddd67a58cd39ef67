// Continuum limit of the closed-loop spinometer on the unit sphere: drift
// and diffusion of the coherent-state label, radial-moment conservation,
// the stationary Fokker-Planck density in z = x.t, an Euler-Maruyama
// sampler, and the Monte Carlo bridge that ties the coefficients back to
// exact one-step spinometer statistics.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "spinlab/core.hpp"
#include "spinlab/rng.hpp"
#include "spinlab/spinometer.hpp"

namespace spinlab {

struct DriftDiffusionModel {
  double j = 0.5;
  double alpha = 0.0;
  Vec3 t_axis{0.0, 0.0, 1.0};
  double sensor_gain = 0.0;  // g_s = 2 theta

  static DriftDiffusionModel make(double j_, double alpha_, const Vec3& t, double theta) {
    if (!is_half_integer_spin(j_)) throw std::invalid_argument("j must be half-integer");
    DriftDiffusionModel m;
    m.j = j_;
    m.alpha = alpha_;
    m.t_axis = normalize_axis(t);
    m.sensor_gain = 2.0 * theta;
    return m;
  }
};

// a(x) = x/4 [alpha(1-2j) x.t - (1 + alpha^2/2)] + t/4 [alpha(1+2j) - alpha^2/2 x.t]
inline Vec3 drift(const DriftDiffusionModel& m, const Vec3& x) {
  const double z = x.dot(m.t_axis);
  const double a = m.alpha;
  return 0.25 * x * (a * (1.0 - 2.0 * m.j) * z - (1.0 + 0.5 * a * a)) +
         0.25 * m.t_axis * (a * (1.0 + 2.0 * m.j) - 0.5 * a * a * z);
}

// b(x) = 1/2 [I - x (x)T + alpha (t (x)T - x.t I)]
inline Mat3 diffusion_matrix(const DriftDiffusionModel& m, const Vec3& x) {
  const double z = x.dot(m.t_axis);
  return 0.5 * (Mat3::Identity() - x * x.transpose() +
                m.alpha * (m.t_axis * x.transpose() - z * Mat3::Identity()));
}

// Increment of the m-th radial moment,
//   m(m-2)/2 [x.b b'.x] + m |x|^2 [tr(b b')/2 + x.a],
// which must vanish identically on the unit sphere.
inline double radial_moment_increment(const DriftDiffusionModel& model, const Vec3& x,
                                      int moment) {
  if (moment < 1) throw std::invalid_argument("moment order must be >= 1");
  const Mat3 b = diffusion_matrix(model, x);
  const Mat3 bbt = b * b.transpose();
  const Vec3 a = drift(model, x);
  const double quad = x.dot(bbt * x);
  return 0.5 * moment * (moment - 2.0) * quad +
         moment * x.squaredNorm() * (0.5 * bbt.trace() + x.dot(a));
}

// One Euler-Maruyama step with the paper's weights (drift g^2, noise g),
// followed by projection back to the unit sphere. dt_scale subdivides the
// macro-step: drift scales with dt, noise with sqrt(dt).
inline Vec3 sde_step(const DriftDiffusionModel& m, const Vec3& x, const Vec3& gaussian_draws,
                     double dt_scale = 1.0) {
  const double g = m.sensor_gain;
  const Vec3 moved = x + dt_scale * g * g * drift(m, x) +
                     std::sqrt(dt_scale) * g * (diffusion_matrix(m, x) * gaussian_draws);
  const double n = moved.norm();
  if (n < 1e-12) throw std::runtime_error("SDE step collapsed to the origin");
  return moved / n;
}

namespace detail {

// Stationary weight w(z) = [(1-alpha^2)/(1-2 alpha z + alpha^2)]^{2j+2}
// and the closed-form antiderivative of its unnormalized core D^{-n}.
inline double fp_denominator(double alpha, double z) {
  return 1.0 - 2.0 * alpha * z + alpha * alpha;
}

inline double fp_weight(double j, double alpha, double z) {
  const double n = 2.0 * j + 2.0;
  return std::pow((1.0 - alpha * alpha) / fp_denominator(alpha, z), n);
}

// \int D(z)^{-n} dz = D^{1-n} / (2 alpha (n-1)) for alpha != 0.
inline double fp_core_antiderivative(double j, double alpha, double z) {
  const double n = 2.0 * j + 2.0;
  if (alpha == 0.0) return z;
  return std::pow(fp_denominator(alpha, z), 1.0 - n) / (2.0 * alpha * (n - 1.0));
}

}  // namespace detail

// Residual of the stationary Fokker-Planck equation
//   0 = -d/dz [A(z) P] + 1/2 d^2/dz^2 [B(z) P],
//   A = alpha(1+z^2) + 2 j alpha (1-z^2) - z (1+alpha^2),
//   B = (1-z^2)(1 - 2 alpha z + alpha^2),
// evaluated with hand-coded analytic derivatives of the supplied candidate
// (P, P', P''). Returned normalized by the magnitude of the constituent
// terms, since the raw flux terms span many decades across (j, alpha).
inline double fp_residual_terms(double j, double alpha, double z, double p, double dp,
                                double d2p) {
  const double a2 = alpha * alpha;
  const double A = alpha * (1.0 + z * z) + 2.0 * j * alpha * (1.0 - z * z) - z * (1.0 + a2);
  const double dA = 2.0 * alpha * z - 4.0 * j * alpha * z - (1.0 + a2);
  const double D = detail::fp_denominator(alpha, z);
  const double B = (1.0 - z * z) * D;
  const double dB = -2.0 * z * D - 2.0 * alpha * (1.0 - z * z);
  const double d2B = -2.0 * D + 8.0 * alpha * z;
  const double terms[5] = {-dA * p, -A * dp, 0.5 * d2B * p, dB * dp, 0.5 * B * d2p};
  double residual = 0.0, scale = 0.0;
  for (double t : terms) {
    residual += t;
    scale += std::abs(t);
  }
  return std::abs(residual) / std::max(1.0, scale);
}

// Residual of the closed-form stationary solution itself. P = c D^{-n} has
// P' = 2 alpha n c D^{-n-1} and P'' = 4 alpha^2 n (n+1) c D^{-n-2}.
inline double fp_residual_stationary(double j, double alpha, double z) {
  const double n = 2.0 * j + 2.0;
  const double c = std::pow(1.0 - alpha * alpha, n);
  const double D = detail::fp_denominator(alpha, z);
  const double p = c * std::pow(D, -n);
  const double dp = 2.0 * alpha * n * c * std::pow(D, -n - 1.0);
  const double d2p = 4.0 * alpha * alpha * n * (n + 1.0) * c * std::pow(D, -n - 2.0);
  return fp_residual_terms(j, alpha, z, p, dp, d2p);
}

// Tabulated stationary density of z = x.t with the closed-form normalization.
struct SphereDistribution {
  double j = 0.0;
  double alpha = 0.0;
  std::vector<double> z_grid;
  std::vector<double> density;  // closed-form weight, not yetz-normalized
  double total_core_mass = 0.0; // \int_{-1}^{1} D^{-n} dz

  // Probability mass of [z0, z1] under the z-marginal.
  double bin_mass(double z0, double z1) const {
    const double lo = detail::fp_core_antiderivative(j, alpha, z0);
    const double hi = detail::fp_core_antiderivative(j, alpha, z1);
    return (hi - lo) / total_core_mass;
  }

  // z with P(Z <= z) = p; closed-form inverse of the cumulative mass.
  double quantile(double p) const {
    if (alpha == 0.0) return -1.0 + 2.0 * p;
    const double n = 2.0 * j + 2.0;
    const double lo = detail::fp_core_antiderivative(j, alpha, -1.0);
    const double target = lo + p * total_core_mass;
    const double D = std::pow(target * 2.0 * alpha * (n - 1.0), 1.0 / (1.0 - n));
    return (1.0 + alpha * alpha - D) / (2.0 * alpha);
  }
};

inline SphereDistribution stationary_density(double j, double alpha, int grid_points = 512) {
  if (!(std::abs(alpha) < 1.0))
    throw std::invalid_argument("stationary density requires |alpha| < 1");
  if (!is_half_integer_spin(j)) throw std::invalid_argument("j must be half-integer");
  SphereDistribution dist;
  dist.j = j;
  dist.alpha = alpha;
  dist.z_grid.resize(grid_points);
  dist.density.resize(grid_points);
  for (int i = 0; i < grid_points; ++i) {
    const double z = -1.0 + 2.0 * (i + 0.5) / grid_points;
    dist.z_grid[i] = z;
    dist.density[i] = detail::fp_weight(j, alpha, z);
  }
  dist.total_core_mass = detail::fp_core_antiderivative(j, alpha, 1.0) -
                         detail::fp_core_antiderivative(j, alpha, -1.0);
  return dist;
}

// z samples of one SDE trajectory after burn-in, decorrelated by `stride`.
inline std::vector<double> sde_trajectory_z_samples(const DriftDiffusionModel& m, const Vec3& x0,
                                                    long steps, long burn_in, long stride,
                                                    std::uint64_t master_seed,
                                                    std::uint64_t trajectory_id,
                                                    std::vector<double>* phi_out = nullptr) {
  CounterRng rng(master_seed, trajectory_id);
  Vec3 x = normalize_axis(x0);
  std::vector<double> out;
  for (long n = 0; n < steps; ++n) {
    const Vec3 w(rng.gaussian(), rng.gaussian(), rng.gaussian());
    x = sde_step(m, x, w);
    if (n >= burn_in && (n - burn_in) % stride == stride - 1) {
      out.push_back(x.dot(m.t_axis));
      if (phi_out) phi_out->push_back(std::atan2(x[1], x[0]));
    }
  }
  return out;
}

// One-macro-step statistics of the closed-loop triaxial spinometer started
// from the coherent state at x0: block-averaged estimates of E[dx]/g^2 and
// Cov[dx]/g^2 with standard errors, plus the covariance of the data triple
// (the discrete Wiener increment check).
struct BridgeEstimate {
  Vec3 drift_mean = Vec3::Zero();
  Vec3 drift_se = Vec3::Zero();
  Mat3 covariance = Mat3::Zero();
  Mat3 covariance_se = Mat3::Zero();
  Mat3 data_covariance = Mat3::Zero();
  Mat3 data_covariance_se = Mat3::Zero();
  long samples = 0;
};

inline BridgeEstimate mc_bridge(const SpinSystem& sys, const SpinometerConfig& cfg,
                                const Vec3& x0, long n_samples, std::uint64_t master_seed,
                                int n_blocks = 100) {
  SpinometerConfig closed = cfg;
  closed.mode = SpinometerMode::closed_loop_triaxial;
  closed.validate();
  const auto pairs = triaxial_operators(sys, closed);
  const auto cs = coherent_state(sys, x0);
  const Vec3 x_start = spin_vector(cs.state, sys);
  const double g2 = 4.0 * closed.theta * closed.theta;

  const long block_len = n_samples / n_blocks;
  std::vector<Vec3> block_drift(n_blocks);
  std::vector<Mat3> block_cov(n_blocks), block_dcov(n_blocks);

  VectorC work(sys.dim);
  for (int blk = 0; blk < n_blocks; ++blk) {
    Vec3 sum_dx = Vec3::Zero();
    Mat3 sum_dxdx = Mat3::Zero();
    Vec3 sum_d = Vec3::Zero();
    Mat3 sum_dd = Mat3::Zero();
    for (long s = 0; s < block_len; ++s) {
      CounterRng rng(master_seed, static_cast<std::uint64_t>(blk) * block_len + s);
      PureState psi = cs.state;
      Vec3 d;
      for (int k = 0; k < 3; ++k) {
        work.noalias() = pairs[k].a * psi.amplitudes;
        const double p_a = work.squaredNorm();
        if (rng.uniform() < p_a) {
          psi.amplitudes = work / std::sqrt(p_a);
          d[k] = 1.0;
        } else {
          work.noalias() = pairs[k].b * psi.amplitudes;
          psi.amplitudes = work / std::sqrt(work.squaredNorm());
          d[k] = -1.0;
        }
      }
      const Vec3 dx = spin_vector(psi, sys) - x_start;
      sum_dx += dx;
      sum_dxdx += dx * dx.transpose();
      sum_d += d;
      sum_dd += d * d.transpose();
    }
    const Vec3 mean_dx = sum_dx / block_len;
    const Vec3 mean_d = sum_d / block_len;
    block_drift[blk] = mean_dx / g2;
    const double bessel = static_cast<double>(block_len) / (block_len - 1);
    block_cov[blk] =
        bessel * (sum_dxdx / block_len - mean_dx * mean_dx.transpose()) / g2;
    block_dcov[blk] = bessel * (sum_dd / block_len - mean_d * mean_d.transpose());
  }

  BridgeEstimate est;
  est.samples = block_len * n_blocks;
  for (int blk = 0; blk < n_blocks; ++blk) {
    est.drift_mean += block_drift[blk];
    est.covariance += block_cov[blk];
    est.data_covariance += block_dcov[blk];
  }
  est.drift_mean /= n_blocks;
  est.covariance /= n_blocks;
  est.data_covariance /= n_blocks;
  Vec3 var_drift = Vec3::Zero();
  Mat3 var_cov = Mat3::Zero(), var_dcov = Mat3::Zero();
  for (int blk = 0; blk < n_blocks; ++blk) {
    var_drift += (block_drift[blk] - est.drift_mean).cwiseAbs2();
    var_cov += (block_cov[blk] - est.covariance).cwiseAbs2();
    var_dcov += (block_dcov[blk] - est.data_covariance).cwiseAbs2();
  }
  const double denom = static_cast<double>(n_blocks) * (n_blocks - 1);
  est.drift_se = (var_drift / denom).cwiseSqrt();
  est.covariance_se = (var_cov / denom).cwiseSqrt();
  est.data_covariance_se = (var_dcov / denom).cwiseSqrt();
  return est;
}

}  // namespace spinlab
