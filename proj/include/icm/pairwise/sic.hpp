#pragma once

// Spectral Independence Criterion for filtered time series Y = h ⋆ X.
// Spectra are Welch estimates with a periodic Hann window.

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "icm/contrasts.hpp"
#include "icm/error.hpp"
#include "icm/pairwise/verdict.hpp"
#include "icm/spectrum.hpp"
#include "icm/stats.hpp"

namespace icm::pairwise {

struct SpectralConfig {
  std::size_t segment = 256;
  double overlap = 0.5;
  double threshold = 0.01;  // decision band on the log-ratio margin
};

struct TimeSeriesPair {
  std::vector<double> x;
  std::vector<double> y;

  TimeSeriesPair(std::vector<double> xs, std::vector<double> ys)
      : x(std::move(xs)), y(std::move(ys)) {
    if (x.size() != y.size()) throw DataError("time series pair must have equal lengths");
    if (x.size() < 256) throw DataError("time series pair needs at least 256 samples");
  }
};

namespace detail {

inline void validate(const SpectralConfig& cfg, std::size_t length) {
  const std::size_t l = cfg.segment;
  if (l < 2 || (l & (l - 1)) != 0) throw ConfigError("invalid config: segment must be a power of two");
  if (l > length) throw ConfigError("invalid config: segment longer than the series");
  if (!(cfg.overlap >= 0.0 && cfg.overlap < 1.0))
    throw ConfigError("invalid config: overlap must lie in [0, 1)");
}

struct CrossSpectra {
  std::vector<double> sxx, syy;
  std::vector<std::complex<double>> syx;
};

// Welch auto- and cross-spectra on bins k = 0..L/2-1, normalized so that
// 2/L Σ_k S(k) approximates the variance.
inline CrossSpectra welch(std::span<const double> x, std::span<const double> y,
                          const SpectralConfig& cfg) {
  validate(cfg, x.size());
  const std::size_t l = cfg.segment;
  const std::size_t half = l / 2;
  const auto hop = std::max<std::size_t>(
      1, l - static_cast<std::size_t>(std::llround(cfg.overlap * static_cast<double>(l))));
  const double mx = stats::mean(x);
  const double my = stats::mean(y);

  std::vector<double> window(l);
  double wsum2 = 0.0;
  for (std::size_t t = 0; t < l; ++t) {
    window[t] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(t) / static_cast<double>(l));
    wsum2 += window[t] * window[t];
  }

  CrossSpectra out{std::vector<double>(half, 0.0), std::vector<double>(half, 0.0),
                   std::vector<std::complex<double>>(half, 0.0)};
  Eigen::FFT<double> fft;
  std::vector<double> bx(l), by(l);
  std::vector<std::complex<double>> fx, fy;
  std::size_t segments = 0;
  for (std::size_t start = 0; start + l <= x.size(); start += hop) {
    for (std::size_t t = 0; t < l; ++t) {
      bx[t] = (x[start + t] - mx) * window[t];
      by[t] = (y[start + t] - my) * window[t];
    }
    fft.fwd(fx, bx);
    fft.fwd(fy, by);
    for (std::size_t k = 0; k < half; ++k) {
      out.sxx[k] += std::norm(fx[k]);
      out.syy[k] += std::norm(fy[k]);
      out.syx[k] += fy[k] * std::conj(fx[k]);
    }
    ++segments;
  }
  const double scale = 1.0 / (wsum2 * static_cast<double>(segments));
  for (std::size_t k = 0; k < half; ++k) {
    out.sxx[k] *= scale;
    out.syy[k] *= scale;
    out.syx[k] *= scale;
  }
  return out;
}

}  // namespace detail

/// Welch PSD (mean removed, Hann window) on the positive-frequency grid.
inline SampledPsd welch_psd(std::span<const double> series, const SpectralConfig& cfg = {}) {
  return SampledPsd(detail::welch(series, series, cfg).sxx);
}

struct TransferEstimate {
  SampledPsd h2;                           // |ĥ(ν)|² per bin
  std::vector<std::size_t> floored_bins;   // bins where Ŝ_xx was floored
};

namespace detail {
inline TransferEstimate transfer_from(const std::vector<double>& sxx,
                                      const std::vector<std::complex<double>>& syx) {
  double peak = 0.0;
  for (double v : sxx) peak = std::max(peak, v);
  if (!(peak > 0.0)) throw DegenerateError("degenerate input spectrum: zero input power");
  const double floor = 1e-12 * peak;
  TransferEstimate out;
  std::vector<double> h2(sxx.size());
  for (std::size_t k = 0; k < sxx.size(); ++k) {
    double s = sxx[k];
    if (s <= floor) {
      s = floor;
      out.floored_bins.push_back(k);
    }
    h2[k] = std::norm(syx[k]) / (s * s);
  }
  out.h2 = SampledPsd(std::move(h2));
  return out;
}
}  // namespace detail

/// |Ŝ_yx|² / Ŝ_xx² from Welch cross-spectra.
inline TransferEstimate estimate_transfer_magnitude(std::span<const double> x,
                                                    std::span<const double> y,
                                                    const SpectralConfig& cfg = {}) {
  if (x.size() != y.size()) throw DataError("x and y must have equal lengths");
  const auto cs = detail::welch(x, y, cfg);
  return detail::transfer_from(cs.sxx, cs.syx);
}

/// Filtered power over the product of input power and filter power.
inline double sic_ratio(const SampledPsd& sxx, const SampledPsd& h2) {
  if (sxx.bins() != h2.bins()) throw ConfigError("sic_ratio: bin counts differ");
  stats::CompensatedSum acc;
  for (std::size_t b = 0; b < sxx.bins(); ++b) acc.add(sxx[b] * h2[b]);
  const double overlap = 2.0 * sxx.delta_nu() * acc.value();
  const double px = contrasts::total_power(sxx);
  const double ph = contrasts::total_power(h2);
  if (!(px > 0.0) || !(ph > 0.0)) throw DegenerateError("degenerate spectrum: zero total power");
  return overlap / (px * ph);
}

struct SicDiagnostics {
  DirectionVerdict verdict;
  std::vector<std::size_t> floored_forward;
  std::vector<std::size_t> floored_backward;
};

/// Applies SIC both ways; the transfer magnitude in each direction comes
/// from the cross-spectral estimator.
inline SicDiagnostics infer_direction_sic_detailed(const TimeSeriesPair& pair,
                                                   const SpectralConfig& cfg = {}) {
  if (!(cfg.threshold >= 0.0)) throw ConfigError("decision threshold must be nonnegative");
  const auto cs = detail::welch(pair.x, pair.y, cfg);
  std::vector<std::complex<double>> sxy(cs.syx.size());
  for (std::size_t k = 0; k < sxy.size(); ++k) sxy[k] = std::conj(cs.syx[k]);
  const TransferEstimate fwd = detail::transfer_from(cs.sxx, cs.syx);
  const TransferEstimate bwd = detail::transfer_from(cs.syy, sxy);
  SicDiagnostics out;
  out.verdict = decide(sic_ratio(SampledPsd(cs.sxx), fwd.h2), sic_ratio(SampledPsd(cs.syy), bwd.h2),
                       cfg.threshold);
  out.floored_forward = fwd.floored_bins;
  out.floored_backward = bwd.floored_bins;
  return out;
}

inline DirectionVerdict infer_direction_sic(const TimeSeriesPair& pair,
                                            const SpectralConfig& cfg = {}) {
  return infer_direction_sic_detailed(pair, cfg).verdict;
}

}  // namespace icm::pairwise
