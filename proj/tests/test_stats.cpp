#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "spinlab/rng.hpp"
#include "spinlab/stats.hpp"

using namespace spinlab;

TEST_CASE("running stats merge associatively") {
  CounterRng rng(66, 0);
  RunningStats whole, part_a, part_b;
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.gaussian() * 2.0 + 1.0;
    whole.add(x);
    (i < 400 ? part_a : part_b).add(x);
  }
  RunningStats merged = part_a;
  merged.merge(part_b);
  CHECK(merged.count == whole.count);
  CHECK(merged.mean() == Catch::Approx(whole.mean()).epsilon(1e-14));
  CHECK(merged.variance() == Catch::Approx(whole.variance()).epsilon(1e-12));
  CHECK(whole.mean() == Catch::Approx(1.0).margin(4.0 * whole.standard_error()));
}

TEST_CASE("histogram binning and out-of-range accounting") {
  Histogram h({0.0, 1.0, 2.0, 3.0});
  h.add(0.5);
  h.add(1.5);
  h.add(1.7);
  h.add(2.9);
  h.add(-1.0);
  h.add(5.0);
  CHECK(h.counts[0] == 1);
  CHECK(h.counts[1] == 2);
  CHECK(h.counts[2] == 1);
  CHECK(h.total == 4);
  CHECK(h.out_of_range == 2);

  Histogram other({0.0, 1.0, 2.0, 3.0});
  other.add(0.1);
  h.merge(other);
  CHECK(h.counts[0] == 2);
  CHECK(h.total == 5);
}

TEST_CASE("chi-squared test calibrates on uniform draws") {
  CounterRng rng(66, 1);
  const int bins = 20;
  std::vector<double> edges(bins + 1);
  for (int i = 0; i <= bins; ++i) edges[i] = static_cast<double>(i) / bins;
  Histogram h(edges);
  for (int i = 0; i < 100000; ++i) h.add(rng.uniform());
  const auto res = chi_squared_test(h, std::vector<double>(bins, 1.0 / bins));
  CHECK(res.dof == bins - 1);
  CHECK(res.p_value > 0.001);
  CHECK(res.p_value < 0.9999);

  // A grossly wrong model must be rejected.
  std::vector<double> wrong(bins, 1.0 / bins);
  wrong[0] = 0.3;
  const double rest = 0.7 / (bins - 1);
  for (int i = 1; i < bins; ++i) wrong[i] = rest;
  CHECK(chi_squared_test(h, wrong).p_value < 1e-10);
}
