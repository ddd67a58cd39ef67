#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "spinlab/density_evolution.hpp"
#include "spinlab/rng.hpp"

using namespace spinlab;

namespace {

MatrixC random_density(CounterRng& rng, int dim) {
  MatrixC g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int k = 0; k < dim; ++k) g(i, k) = cx(rng.gaussian(), rng.gaussian());
  MatrixC rho = g * g.adjoint();
  rho /= rho.trace().real();
  return rho;
}

double fitted_slope(const std::vector<double>& thetas, const std::vector<double>& residuals) {
  const int n = static_cast<int>(thetas.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double x = std::log(thetas[i]);
    const double y = std::log(std::max(residuals[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("alpha from beta and detailed balance") {
  CHECK(alpha_from_beta(0.0) == Catch::Approx(0.0).margin(1e-15));
  CHECK(alpha_from_beta(4.0) == Catch::Approx(-std::tanh(1.0)).epsilon(1e-14));
  for (double beta : {0.3, 0.5, 1.0, 2.0, 4.0, 7.0}) {
    const auto p = LindbladParams::from(alpha_from_beta(beta), 0.1);
    REQUIRE(p.gamma > 0.0);
    REQUIRE(p.nu > 0.0);
    REQUIRE(p.detailed_balance_ratio() == Catch::Approx(std::exp(beta)).epsilon(1e-12));
  }
}

TEST_CASE("density increment: trace, hermiticity, unital case") {
  const auto sys = build_spin_system(1.0);
  CounterRng rng(21, 0);

  // alpha = 0, rho = I: completeness makes the increment vanish exactly.
  const auto open_map = EnsembleMap::make(sys, 0.1, 0.0);
  const MatrixC id = MatrixC::Identity(sys.dim, sys.dim);
  CHECK(max_abs(density_increment(id, open_map)) < 1e-14);

  const auto map = EnsembleMap::make(sys, 0.1, -0.45);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixC rho = random_density(rng, sys.dim);
    const MatrixC delta = density_increment(rho, map);
    REQUIRE(std::abs(delta.trace()) < 1e-12);
    REQUIRE(max_abs(MatrixC(delta - delta.adjoint())) < 1e-12);
  }

  // The adjoint ordering is not trace preserving once feedback is on;
  // that is what disambiguates the printed form.
  const MatrixC rho = random_density(rng, sys.dim);
  CHECK(std::abs(density_increment(rho, map, IncrementOrdering::adjoint).trace()) > 1e-6);
  CHECK(std::abs(density_increment(rho, open_map, IncrementOrdering::adjoint).trace()) < 1e-12);
}

TEST_CASE("thermal operator is an O(theta^4) fixed point of the discrete map") {
  for (double j : {0.5, 1.0}) {
    const auto sys = build_spin_system(j);
    for (double beta : {0.5, 1.0, 2.0}) {
      const double alpha = alpha_from_beta(beta);
      const MatrixC rho_th = thermal_operator(sys, ThermalSpec(beta, Vec3(0, 0, 1))).matrix;
      std::vector<double> thetas = {0.04, 0.02, 0.01}, residuals;
      for (double theta : thetas) {
        const auto map = EnsembleMap::make(sys, theta, alpha);
        residuals.push_back(max_abs(density_increment(rho_th, map)));
      }
      REQUIRE(fitted_slope(thetas, residuals) >= 2.9);
    }
  }
}

TEST_CASE("lindblad generator annihilates the thermal state and matches the map") {
  const auto sys = build_spin_system(1.0);
  const double beta = 1.2;
  const double alpha = alpha_from_beta(beta);
  const MatrixC rho_th = thermal_operator(sys, ThermalSpec(beta, Vec3(0, 0, 1))).matrix;

  const auto params = LindbladParams::from(alpha, 0.05);
  CHECK(max_abs(lindblad_increment(rho_th, sys, params)) < 1e-12 * max_abs(rho_th));

  // O(theta^2) match against the exact discrete increment on random states.
  CounterRng rng(21, 1);
  const MatrixC rho = random_density(rng, sys.dim);
  std::vector<double> thetas = {0.04, 0.02, 0.01}, residuals;
  for (double theta : thetas) {
    const auto map = EnsembleMap::make(sys, theta, alpha);
    const auto p = LindbladParams::from(alpha, theta);
    residuals.push_back(max_abs(MatrixC(density_increment(rho, map) -
                                        lindblad_increment(rho, sys, p))));
  }
  CHECK(fitted_slope(thetas, residuals) >= 3.0);

  // For diagonal rho the dephasing line is inert.
  MatrixC diag = MatrixC::Zero(sys.dim, sys.dim);
  diag(0, 0) = 0.2;
  diag(1, 1) = 0.5;
  diag(2, 2) = 0.3;
  auto no_dephasing = params;
  no_dephasing.dephasing = 0.0;
  CHECK(max_abs(MatrixC(lindblad_increment(diag, sys, params) -
                        lindblad_increment(diag, sys, no_dephasing))) < 1e-14);

  // Tilted thermal axis: the frame-rotated generator annihilates the tilted state.
  const Vec3 t = Vec3(0.36, -0.48, 0.8);
  const MatrixC rho_tilt = thermal_operator(sys, ThermalSpec(beta, t)).matrix;
  CHECK(max_abs(lindblad_increment(rho_tilt, sys, params, t)) < 1e-12 * max_abs(rho_tilt));
}

TEST_CASE("relaxation reaches a unique thermal fixed point") {
  const auto sys = build_spin_system(0.5);
  const double beta = 1.0, theta = 0.1;
  const auto map = EnsembleMap::make(sys, theta, alpha_from_beta(beta));
  const MatrixC rho_th = thermal_operator(sys, ThermalSpec(beta, Vec3(0, 0, 1))).matrix;

  const MatrixC uniform = MatrixC::Identity(2, 2) / 2.0;
  const auto res = evolve_to_stationary(uniform, map, 1e-12);
  REQUIRE(res.converged);
  CHECK(trace_distance(res.rho.matrix, rho_th) < 5e-3);
  res.rho.validate();

  // Starting on the thermal operator: residual already at the theta^4 floor.
  const double floor = max_abs(density_increment(rho_th, map)) / std::max(1.0, max_abs(rho_th));
  const auto at_th = evolve_to_stationary(rho_th, map, 1.5 * floor);
  CHECK(at_th.iterations == 0);

  // Uniqueness probe across random starts.
  CounterRng rng(21, 2);
  std::vector<MatrixC> fixed_points;
  for (int trial = 0; trial < 10; ++trial) {
    const auto r = evolve_to_stationary(random_density(rng, 2), map, 1e-12);
    REQUIRE(r.converged);
    fixed_points.push_back(r.rho.matrix);
  }
  for (std::size_t a = 0; a < fixed_points.size(); ++a)
    for (std::size_t b = a + 1; b < fixed_points.size(); ++b)
      REQUIRE(trace_distance(fixed_points[a], fixed_points[b]) < 1e-6);

  // Non-convergence is reported with the final residual.
  const auto bail = evolve_to_stationary(uniform, map, 1e-12, 3);
  CHECK_FALSE(bail.converged);
  CHECK(bail.residual > 0.0);
}

TEST_CASE("second branch of the stationarity condition also thermalizes") {
  // 1/alpha = -tanh(beta/4): the |alpha| > 1 branch shares the detailed
  // balance ratio at O(theta^2), so the discrete map should still relax to
  // the thermal state, just with larger higher-order corrections.
  const auto sys = build_spin_system(0.5);
  const double beta = 1.0, theta = 0.02;
  const double alpha2 = 1.0 / alpha_from_beta(beta);
  const auto p2 = LindbladParams::from(alpha2, theta);
  CHECK(p2.detailed_balance_ratio() == Catch::Approx(std::exp(beta)).epsilon(1e-12));

  const auto map = EnsembleMap::make(sys, theta, alpha2);
  const MatrixC rho_th = thermal_operator(sys, ThermalSpec(beta, Vec3(0, 0, 1))).matrix;
  const auto res = evolve_to_stationary(MatrixC(MatrixC::Identity(2, 2) / 2.0), map, 1e-12);
  REQUIRE(res.converged);
  CHECK(trace_distance(res.rho.matrix, rho_th) < 5e-2);
}
