// Estimator helpers: running moments with exact merging, fixed-edge
// histograms, and the chi-squared goodness-of-fit machinery.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "spinlab/special_functions.hpp"

namespace spinlab {

// Sum / sum-of-squares accumulator. merge() is associative, so chunked
// parallel reductions combine to the same result in any grouping as long as
// the final combination order is fixed.
struct RunningStats {
  double count = 0.0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double x) {
    count += 1.0;
    sum += x;
    sum_sq += x * x;
  }
  void merge(const RunningStats& o) {
    count += o.count;
    sum += o.sum;
    sum_sq += o.sum_sq;
  }
  double mean() const { return sum / count; }
  double variance() const {
    const double m = mean();
    return std::max(0.0, sum_sq / count - m * m);
  }
  double standard_error() const { return std::sqrt(variance() / count); }
};

struct Histogram {
  std::vector<double> edges;   // ascending, size bins+1
  std::vector<long> counts;    // size bins
  long total = 0;
  long out_of_range = 0;

  explicit Histogram(std::vector<double> edges_) : edges(std::move(edges_)) {
    if (edges.size() < 2) throw std::invalid_argument("histogram needs at least one bin");
    counts.assign(edges.size() - 1, 0);
  }

  void add(double x) {
    const auto it = std::upper_bound(edges.begin(), edges.end(), x);
    if (it == edges.begin() || it == edges.end()) {
      ++out_of_range;
      return;
    }
    ++counts[static_cast<std::size_t>(it - edges.begin()) - 1];
    ++total;
  }

  void merge(const Histogram& o) {
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
    total += o.total;
    out_of_range += o.out_of_range;
  }
};

// Pearson statistic against expected bin probabilities (which must sum to
// ~1 over the histogram range).
struct ChiSquared {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

inline ChiSquared chi_squared_test(const Histogram& h, const std::vector<double>& expected_mass) {
  if (expected_mass.size() != h.counts.size())
    throw std::invalid_argument("expected-mass vector size mismatch");
  ChiSquared out;
  const double n = static_cast<double>(h.total);
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const double e = n * expected_mass[i];
    if (e < 5.0) throw std::invalid_argument("expected bin count below 5; rebin");
    const double d = h.counts[i] - e;
    out.statistic += d * d / e;
  }
  out.dof = static_cast<double>(h.counts.size()) - 1.0;
  out.p_value = chi_squared_pvalue(out.statistic, out.dof);
  return out;
}

}  // namespace spinlab
