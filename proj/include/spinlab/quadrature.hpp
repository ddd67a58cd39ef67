// Quadrature on [-1,1] and on the unit sphere.
//
// The sphere rule is a product rule: Gauss-Legendre in z = cos(theta),
// uniform trapezoid in phi. It integrates exactly any integrand that is a
// polynomial of bounded degree in z times a trigonometric polynomial of
// bounded order in phi, which covers the coherent-state dyad integrands.
// Non-polynomial integrands go through converge_by_doubling().
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "spinlab/core.hpp"

namespace spinlab {

// Gauss-Legendre nodes/weights via Newton iteration on P_n.
struct GaussLegendre {
  std::vector<double> nodes;    // ascending in (-1,1)
  std::vector<double> weights;  // sum to 2

  static GaussLegendre compute(int n) {
    GaussLegendre rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
      double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        // Legendre recurrence for P_n(x) and P'_n(x).
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      rule.nodes[i] = -x;
      rule.nodes[n - 1 - i] = x;
      const double w = 2.0 / ((1.0 - x * x) * dp * dp);
      rule.weights[i] = w;
      rule.weights[n - 1 - i] = w;
    }
    return rule;
  }

  // Cached accessor; rules are immutable once built.
  static const GaussLegendre& get(int n) {
    static std::map<int, GaussLegendre> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute(n)).first;
    return it->second;
  }
};

// Product rule on the sphere. integrate() sums f over nodes with the full
// solid-angle weight d^2x = dz dphi, so a unit integrand gives 4*pi.
struct SphereQuadrature {
  std::vector<double> z_nodes;
  std::vector<double> z_weights;
  int phi_count = 1;

  static SphereQuadrature make(int z_points, int phi_points) {
    SphereQuadrature q;
    const auto& gl = GaussLegendre::get(z_points);
    q.z_nodes = gl.nodes;
    q.z_weights = gl.weights;
    q.phi_count = phi_points;
    return q;
  }

  // Exact for z-polynomials of degree <= z_degree and phi harmonics
  // e^{i k phi} with |k| <= max_phi_frequency.
  static SphereQuadrature exact_for(int z_degree, int max_phi_frequency) {
    const int nz = z_degree / 2 + 1;
    const int nphi = max_phi_frequency + 1;
    return make(std::max(nz, 1), std::max(nphi, 1));
  }

  std::size_t node_count() const { return z_nodes.size() * static_cast<std::size_t>(phi_count); }

  // f(xhat, z, phi, weight); weights sum to 4*pi.
  template <class F>
  void for_each_node(F&& f) const {
    const double dphi = 2.0 * kPi / phi_count;
    for (std::size_t iz = 0; iz < z_nodes.size(); ++iz) {
      const double z = z_nodes[iz];
      const double sin_theta = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double wz = z_weights[iz] * dphi;
      for (int ip = 0; ip < phi_count; ++ip) {
        const double phi = dphi * ip;
        const Vec3 xhat(sin_theta * std::cos(phi), sin_theta * std::sin(phi), z);
        f(xhat, z, phi, wz);
      }
    }
  }

  template <class F>
  double integrate(F&& f) const {
    double acc = 0.0;
    for_each_node([&](const Vec3& x, double z, double phi, double w) { acc += w * f(x, z, phi); });
    return acc;
  }
};

// Doubles the quadrature order until two successive evaluations agree.
// `eval` maps an order index n to a matrix-valued integral estimate.
struct DoublingResult {
  MatrixC value;
  int order = 0;
  double last_change = 0.0;
};

inline DoublingResult converge_by_doubling(const std::function<MatrixC(int)>& eval,
                                           int start_order, int max_order,
                                           double tol = 1e-12) {
  MatrixC prev = eval(start_order);
  for (int n = 2 * start_order; n <= max_order; n *= 2) {
    MatrixC cur = eval(n);
    const double change = max_abs(MatrixC(cur - prev)) / std::max(1.0, max_abs(cur));
    if (change < tol) return {std::move(cur), n, change};
    prev = std::move(cur);
  }
  throw ConvergenceError("quadrature failed to stabilize by order " +
                         std::to_string(max_order));
}

}  // namespace spinlab
