#pragma once

// Writes small input files for exercising the command-line tool.

#include <filesystem>
#include <fstream>
#include <string>

#include "icm/cli/io.hpp"
#include "synth.hpp"

namespace cli_inputs {

namespace fs = std::filesystem;

// Linear pair with n = 3: columns x0..x2 then y0..y2.
inline void write_pairs_csv(const fs::path& path, std::uint64_t seed, icm::Index rows = 2000) {
  icm::Rng rng(seed);
  const icm::Matrix m = synth::random_mechanism(3, rng);
  const icm::Matrix x = synth::gaussian_samples(synth::random_covariance(3, rng), rows, rng);
  const icm::Matrix y = x * m.transpose() + synth::gaussian_noise(rows, 3, 0.05, rng);
  std::ofstream f(path);
  f << "x0,x1,x2,y0,y1,y2\n";
  for (icm::Index i = 0; i < rows; ++i) {
    for (icm::Index j = 0; j < 3; ++j) f << icm::cli::format_double(x(i, j)) << ',';
    for (icm::Index j = 0; j < 3; ++j) f << icm::cli::format_double(y(i, j)) << (j == 2 ? '\n' : ',');
  }
}

// AR(1) input through the filter (1, 1, 1): columns x, y.
inline void write_series_csv(const fs::path& path, std::uint64_t seed, std::size_t length = 4096) {
  icm::Rng rng(seed);
  const auto x = synth::ar1(length, 0.8, rng);
  const auto y = synth::fir(x, {1.0, 1.0, 1.0});
  std::ofstream f(path);
  f << "x,y\n";
  for (std::size_t t = 0; t < length; ++t)
    f << icm::cli::format_double(x[t]) << ',' << icm::cli::format_double(y[t]) << '\n';
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
}

inline const char* kTraceScenario = R"({
  "family": "trace",
  "mechanism": [[2, 0], [0, 1]],
  "cause_covariance": [[1, 0], [0, 3]]
})";

inline const char* kNmfScenario = R"({
  "family": "nmf",
  "w": [[1, 0, 0.5], [0.2, 1, 0], [0, 0.3, 1], [0.4, 0.4, 0.1]],
  "v": [[1, 0, 0], [0, 1, 0.2], [0.3, 0, 1], [0.5, 0.5, 0.5], [0, 0.1, 0.9]]
})";

inline const char* kMixtureScenario = R"({
  "family": "mixture",
  "weights": [0.5, 0.5],
  "means": [[1, 0], [-1, 0]],
  "covariances": [[[2, 0], [0, 1]], [[2, 0], [0, 1]]]
})";

inline const char* kSicScenario = R"({
  "family": "sic",
  "input_psd": [2, 1, 0.5, 0.25, 0.1, 0.1, 0.05, 0.05],
  "transfer": [1, 1.5, 2, 1.5, 1, 0.5, 0.2, 0.1]
})";

}  // namespace cli_inputs
