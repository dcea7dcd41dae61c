#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "icm/error.hpp"

namespace icm::stats {

/// Neumaier-compensated accumulator. Result does not depend on how the
/// terms were grouped as long as they are added in the same order.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double sum(std::span<const double> xs) {
  CompensatedSum acc;
  for (double x : xs) acc.add(x);
  return acc.value();
}

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw DataError("mean of empty sample");
  return sum(xs) / static_cast<double>(xs.size());
}

/// Unbiased (n-1) sample standard deviation.
inline double stddev(std::span<const double> xs) {
  if (xs.size() < 2) throw DataError("standard deviation needs at least two values");
  const double m = mean(xs);
  CompensatedSum acc;
  for (double x : xs) acc.add((x - m) * (x - m));
  return std::sqrt(acc.value() / static_cast<double>(xs.size() - 1));
}

/// Linear-interpolation quantile (the "type 7" definition), q in [0, 1].
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw DataError("quantile of empty sample");
  std::sort(xs.begin(), xs.end());
  const double h = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

inline double median(std::span<const double> xs) {
  return quantile(std::vector<double>(xs.begin(), xs.end()), 0.5);
}

inline double iqr(std::span<const double> xs) {
  std::vector<double> v(xs.begin(), xs.end());
  return quantile(v, 0.75) - quantile(v, 0.25);
}

}  // namespace icm::stats
