#pragma once

// Expected Generic Contrasts, generic ratios and the randomization test.
//
// The EGC of a cause/mechanism pair (x, m) under a contrast C and a compact
// group G with Haar measure μ is E_{g~μ} C(m g x). Closed forms are provided
// for the trace (SO(n)), centered NMF (symmetric group) and quartic mixture
// (O(p)) contrasts; the Monte-Carlo estimator works for any contrast.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "icm/contrasts.hpp"
#include "icm/error.hpp"
#include "icm/groups.hpp"
#include "icm/linalg.hpp"
#include "icm/rng.hpp"
#include "icm/stats.hpp"

namespace icm::genericity {

struct GenericityReport {
  double contrast_value = 0.0;
  double egc = 0.0;
  double generic_ratio = 0.0;
  std::optional<double> mc_stderr;
  std::optional<double> p_value;
  std::size_t n_group_samples = 0;
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<double> samples;  // C(m g_i x), kept for the randomization test
};

/// Raised when the contrast throws on one group sample; carries that sample.
class ContrastEvaluationError : public Error {
 public:
  ContrastEvaluationError(ErrorKind kind, std::size_t index, std::string element,
                          const std::string& cause)
      : Error(kind, "contrast evaluation failed on group sample " + std::to_string(index) +
                        " (" + element + "): " + cause),
        index_(index),
        element_(std::move(element)) {}

  std::size_t sample_index() const noexcept { return index_; }
  const std::string& group_element() const noexcept { return element_; }

 private:
  std::size_t index_;
  std::string element_;
};

namespace detail {
template <class G>
std::string describe_element(const G& g) {
  if constexpr (requires { groups::describe(g); })
    return groups::describe(g);
  else
    return "<group element>";
}
}  // namespace detail

/// Monte-Carlo EGC: mean of evaluate(g_i) over i.i.d. g_i = sampler(rng).
/// `evaluate` computes C(m g x) for one group element.
template <class Sampler, class Evaluate>
McEstimate egc_monte_carlo(Sampler&& sampler, Evaluate&& evaluate, std::size_t n_samples,
                           Rng& rng) {
  if (n_samples < 2) throw ConfigError("egc_monte_carlo needs at least 2 group samples");
  McEstimate est;
  est.samples.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    auto g = sampler(rng);
    try {
      est.samples.push_back(static_cast<double>(evaluate(g)));
    } catch (const Error& e) {
      throw ContrastEvaluationError(e.kind(), i, detail::describe_element(g), e.what());
    } catch (const std::exception& e) {
      throw ContrastEvaluationError(ErrorKind::degenerate, i, detail::describe_element(g),
                                    e.what());
    }
  }
  est.mean = stats::mean(est.samples);
  est.std_error = stats::stddev(est.samples) / std::sqrt(static_cast<double>(n_samples));
  return est;
}

/// Same, with the contrast kept separate from the action g ↦ m g x.
template <class Contrast, class Sampler, class Action>
McEstimate egc_monte_carlo(const Contrast& contrast, Sampler&& sampler, Action&& mechanism_action,
                           std::size_t n_samples, Rng& rng) {
  return egc_monte_carlo(
      std::forward<Sampler>(sampler),
      [&](const auto& g) { return contrast(mechanism_action(g)); }, n_samples, rng);
}

/// Trace-method EGC: τ_n(Σ_X) τ_m(MMᵀ) + τ_m(Σ_E).
inline double egc_trace(const Matrix& m, const Matrix& sigma_x,
                        const std::optional<Matrix>& sigma_e = std::nullopt) {
  if (sigma_x.rows() != m.cols() || sigma_x.cols() != m.cols())
    throw ConfigError("shape error: Sigma_X must be n x n for an m x n mechanism");
  double out = contrasts::normalized_trace(sigma_x) *
               contrasts::normalized_trace(Matrix(m * m.transpose()));
  if (sigma_e) {
    if (sigma_e->rows() != m.rows() || sigma_e->cols() != m.rows())
      throw ConfigError("shape error: Sigma_E must be m x m for an m x n mechanism");
    out += contrasts::normalized_trace(*sigma_e);
  }
  return out;
}

/// Orthogonal matrix whose last column is 𝟙/√n (a Householder reflection).
inline Matrix ones_completion_basis(Index n) {
  Vector v = Vector::Constant(n, -1.0 / std::sqrt(static_cast<double>(n)));
  v(n - 1) += 1.0;
  const double vv = v.squaredNorm();
  Matrix h = Matrix::Identity(n, n);
  if (vv > 0.0) h -= (2.0 / vv) * v * v.transpose();
  return h;
}

/// E_P[P A Pᵀ] over uniform permutations: B diag(α I_{n-1}, λ) Bᵀ with
/// λ = tr(𝟙A)/n, α = (tr A − λ)/(n−1) and B's last column 𝟙/√n.
inline Matrix expected_permutation_conjugation(const Matrix& a) {
  if (a.rows() != a.cols()) throw ConfigError("expected_permutation_conjugation: square matrix expected");
  const Index n = a.rows();
  if (n < 2) throw DegenerateError("degenerate dimension: expected_permutation_conjugation needs n >= 2");
  const double lambda = a.sum() / static_cast<double>(n);
  const double alpha = (a.trace() - lambda) / static_cast<double>(n - 1);
  const Matrix b = ones_completion_basis(n);
  Vector d = Vector::Constant(n, alpha);
  d(n - 1) = lambda;
  return b * d.asDiagonal() * b.transpose();
}

/// tr[W̃ᵀW̃] tr[ṼᵀṼ] / (n−1)
inline double egc_nmf(const NmfFactors& f) {
  contrasts::require_nondegenerate(f);
  const double tw = contrasts::center_columns(f.w()).squaredNorm();
  const double tv = contrasts::center_columns(f.v()).squaredNorm();
  return tw * tv / static_cast<double>(f.components() - 1);
}

/// Contrast minus 4 Σ π_k (μ_kᵀΣ_kμ_k − ‖μ_k‖² tr(Σ_k)/p), for O(p) acting on the means.
inline double egc_mixture(const GaussianMixture& g) {
  contrasts::require_centered(g);
  const double p = static_cast<double>(g.dim());
  stats::CompensatedSum diff;
  for (std::size_t k = 0; k < g.components(); ++k) {
    const Vector& mu = g.means()[k];
    const Matrix& s = g.covariances()[k].matrix();
    diff.add(g.weights()[k] * (mu.dot(s * mu) - mu.squaredNorm() * s.trace() / p));
  }
  return contrasts::mixture_quartic_contrast_unchecked(g) - 4.0 * diff.value();
}

inline double generic_ratio(double contrast_value, double egc) {
  if (!(std::abs(egc) > 1e-12 * std::max(1.0, std::abs(contrast_value))))
    throw DegenerateError("degenerate contrast: EGC is numerically zero, ratio undefined");
  return contrast_value / egc;
}

inline constexpr std::size_t kMinNullSamples = 20;

/// Two-sided, median-centered empirical p-value with add-one correction.
inline double randomization_test(double observed, std::span<const double> null_samples) {
  if (null_samples.size() < kMinNullSamples)
    throw ConfigError("insufficient null samples: randomization test needs at least 20");
  const double med = stats::median(null_samples);
  const double dev = std::abs(observed - med);
  std::size_t extreme = 0;
  for (double s : null_samples)
    if (std::abs(s - med) >= dev) ++extreme;
  return static_cast<double>(1 + extreme) / static_cast<double>(null_samples.size() + 1);
}

/// Report from an observed contrast and a Monte-Carlo null.
inline GenericityReport make_report(double contrast_value, const McEstimate& mc) {
  GenericityReport r;
  r.contrast_value = contrast_value;
  r.egc = mc.mean;
  r.generic_ratio = generic_ratio(contrast_value, mc.mean);
  r.mc_stderr = mc.std_error;
  if (mc.samples.size() >= kMinNullSamples) r.p_value = randomization_test(contrast_value, mc.samples);
  r.n_group_samples = mc.samples.size();
  return r;
}

/// Report from a closed-form EGC (no Monte-Carlo quantities).
inline GenericityReport make_report(double contrast_value, double egc) {
  GenericityReport r;
  r.contrast_value = contrast_value;
  r.egc = egc;
  r.generic_ratio = generic_ratio(contrast_value, egc);
  return r;
}

}  // namespace icm::genericity
