#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "icm/error.hpp"

namespace icm {

/// Even power spectrum stored on its positive half: values[b] is the density
/// at frequency b / (2B), b = 0..B-1, so the bins tile [0, 1/2).
class SampledPsd {
 public:
  SampledPsd() = default;

  explicit SampledPsd(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw DataError("spectrum needs at least one bin");
    for (std::size_t b = 0; b < values_.size(); ++b)
      if (!(values_[b] >= 0.0))
        throw DataError("invalid spectrum: bin " + std::to_string(b) +
                        " is negative or NaN");
  }

  std::size_t bins() const noexcept { return values_.size(); }
  double delta_nu() const noexcept { return 0.5 / static_cast<double>(values_.size()); }
  double frequency(std::size_t b) const noexcept { return static_cast<double>(b) * delta_nu(); }
  double operator[](std::size_t b) const { return values_[b]; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::vector<double> values_;
};

}  // namespace icm
