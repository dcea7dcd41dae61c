#pragma once

// NMF generative model, two solvers, matching-based performance and the
// permutation generic ratio of a factorization.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "icm/assignment.hpp"
#include "icm/contrasts.hpp"
#include "icm/error.hpp"
#include "icm/genericity.hpp"
#include "icm/groups.hpp"
#include "icm/linalg.hpp"
#include "icm/rng.hpp"

namespace icm::latent {

enum class NmfAlgorithm { mult, als };

inline std::string to_string(NmfAlgorithm a) { return a == NmfAlgorithm::mult ? "mult" : "als"; }

inline NmfAlgorithm parse_nmf_algorithm(const std::string& s) {
  if (s == "mult") return NmfAlgorithm::mult;
  if (s == "als") return NmfAlgorithm::als;
  throw ConfigError("unknown NMF algorithm '" + s + "' (expected mult or als)");
}

struct NmfExperimentConfig {
  Index d = 20;
  Index s = 50;
  Index n_true = 5;
  double p_bernoulli = 0.1;
  double noise_amplitude = 0.01;
  Index n_est = 5;
  NmfAlgorithm algorithm = NmfAlgorithm::mult;
  std::size_t n_trials = 200;
  std::uint64_t seed = 1;
  std::size_t max_iters = 500;
  double tol = 1e-6;
  std::size_t null_samples = 200;  // permutations for the per-trial p-value; 0 disables

  void validate() const {
    if (n_true < 1 || d < n_true || s < n_true)
      throw ConfigError("NMF config: need d, s >= n_true >= 1");
    if (!(p_bernoulli > 0.0 && p_bernoulli <= 1.0))
      throw ConfigError("NMF config: p_bernoulli must lie in (0, 1]");
    if (!(noise_amplitude >= 0.0)) throw ConfigError("NMF config: noise_amplitude must be >= 0");
    if (n_est < 1) throw ConfigError("NMF config: n_est must be >= 1");
    if (max_iters < 1) throw ConfigError("NMF config: max_iters must be >= 1");
    if (!(tol >= 0.0)) throw ConfigError("NMF config: tol must be >= 0");
    if (null_samples != 0 && null_samples < genericity::kMinNullSamples)
      throw ConfigError("NMF config: null_samples must be 0 or at least 20");
  }
};

struct NmfInstance {
  Matrix w;  // d×n
  Matrix v;  // s×n
  Matrix x;  // d×s
};

/// W ~ U[0,1]; V sparse with Bernoulli(p) support and U[0,1] values, all-zero
/// columns redrawn; X = W Vᵀ + a·U[0,1] noise.
inline NmfInstance generate_nmf_instance(const NmfExperimentConfig& cfg, Rng& rng) {
  cfg.validate();
  NmfInstance inst;
  inst.w.resize(cfg.d, cfg.n_true);
  for (Index j = 0; j < cfg.n_true; ++j)
    for (Index i = 0; i < cfg.d; ++i) inst.w(i, j) = rng.uniform();
  inst.v = Matrix::Zero(cfg.s, cfg.n_true);
  for (Index j = 0; j < cfg.n_true; ++j) {
    do {
      for (Index i = 0; i < cfg.s; ++i)
        inst.v(i, j) = rng.bernoulli(cfg.p_bernoulli) ? rng.uniform() : 0.0;
    } while (inst.v.col(j).maxCoeff() <= 0.0);
  }
  inst.x = inst.w * inst.v.transpose();
  if (cfg.noise_amplitude > 0.0)
    for (Index j = 0; j < cfg.s; ++j)
      for (Index i = 0; i < cfg.d; ++i) inst.x(i, j) += cfg.noise_amplitude * rng.uniform();
  return inst;
}

struct NmfOptions {
  std::size_t max_iters = 500;
  double tol = 1e-6;  // relative change of the Frobenius loss
};

struct NmfResult {
  NmfFactors factors;
  std::vector<double> loss;  // ‖X − WVᵀ‖_F² after each iteration
  bool converged = false;
};

inline double frobenius_loss(const Matrix& x, const Matrix& w, const Matrix& v) {
  return (x - w * v.transpose()).squaredNorm();
}

inline double relative_error(const Matrix& x, const NmfFactors& f) {
  return (x - f.w() * f.v().transpose()).norm() / x.norm();
}

namespace detail {

inline void check_input(const Matrix& x, Index n_est) {
  if (x.size() == 0) throw DataError("NMF input matrix is empty");
  if (x.minCoeff() < 0.0) throw DataError("invalid input: NMF data must be nonnegative");
  if (n_est < 1) throw ConfigError("NMF: n_est must be >= 1");
}

inline Matrix random_init(Index rows, Index cols, double scale, Rng& rng) {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = scale * rng.uniform();
  return m;
}

inline bool converged(double prev, double cur, double tol) {
  return std::abs(prev - cur) <= tol * std::max(prev, std::numeric_limits<double>::min());
}

}  // namespace detail

inline constexpr double kNmfDenominatorFloor = 1e-12;

/// Lee–Seung multiplicative updates for the Frobenius loss.
inline NmfResult nmf_multiplicative(const Matrix& x, Index n_est, const NmfOptions& opt, Rng& rng) {
  detail::check_input(x, n_est);
  const double scale = std::sqrt(std::max(x.mean(), 1e-300) / static_cast<double>(n_est));
  Matrix w = detail::random_init(x.rows(), n_est, scale, rng);
  Matrix v = detail::random_init(x.cols(), n_est, scale, rng);
  NmfResult out{NmfFactors(w, v), {}, false};
  double prev = frobenius_loss(x, w, v);
  for (std::size_t it = 0; it < opt.max_iters; ++it) {
    const Matrix wnum = x * v;
    const Matrix wden = (w * (v.transpose() * v)).cwiseMax(kNmfDenominatorFloor);
    w = w.cwiseProduct(wnum.cwiseQuotient(wden));
    const Matrix vnum = x.transpose() * w;
    const Matrix vden = (v * (w.transpose() * w)).cwiseMax(kNmfDenominatorFloor);
    v = v.cwiseProduct(vnum.cwiseQuotient(vden));
    const double cur = frobenius_loss(x, w, v);
    out.loss.push_back(cur);
    if (detail::converged(prev, cur, opt.tol)) {
      out.converged = true;
      break;
    }
    prev = cur;
  }
  out.factors = NmfFactors(std::move(w), std::move(v));
  return out;
}

/// Alternating unconstrained least squares, negative entries clamped to 0.
/// The loss is not guaranteed to decrease.
inline NmfResult nmf_als(const Matrix& x, Index n_est, const NmfOptions& opt, Rng& rng) {
  detail::check_input(x, n_est);
  const double scale = std::sqrt(std::max(x.mean(), 1e-300) / static_cast<double>(n_est));
  Matrix w = detail::random_init(x.rows(), n_est, scale, rng);
  Matrix v = detail::random_init(x.cols(), n_est, scale, rng);
  NmfResult out{NmfFactors(w, v), {}, false};
  double prev = frobenius_loss(x, w, v);
  for (std::size_t it = 0; it < opt.max_iters; ++it) {
    // V = max(0, Xᵀ W (WᵀW)⁺), then W = max(0, X V (VᵀV)⁺)
    v = Matrix((w.transpose() * w).completeOrthogonalDecomposition().solve(w.transpose() * x))
            .transpose()
            .cwiseMax(0.0);
    w = Matrix((v.transpose() * v).completeOrthogonalDecomposition().solve(v.transpose() * x.transpose()))
            .transpose()
            .cwiseMax(0.0);
    const double cur = frobenius_loss(x, w, v);
    out.loss.push_back(cur);
    if (detail::converged(prev, cur, opt.tol)) {
      out.converged = true;
      break;
    }
    prev = cur;
  }
  out.factors = NmfFactors(std::move(w), std::move(v));
  return out;
}

inline NmfResult fit_nmf(NmfAlgorithm algo, const Matrix& x, Index n_est, const NmfOptions& opt,
                         Rng& rng) {
  return algo == NmfAlgorithm::mult ? nmf_multiplicative(x, n_est, opt, rng)
                                    : nmf_als(x, n_est, opt, rng);
}

/// Rescales so every column of V has unit length (W absorbs the scale) and
/// orders components by decreasing column length of W. WVᵀ is unchanged.
inline NmfFactors normalize_factors(const NmfFactors& f) {
  Matrix w = f.w();
  Matrix v = f.v();
  for (Index j = 0; j < v.cols(); ++j) {
    const double nv = v.col(j).norm();
    if (nv > 0.0) {
      v.col(j) /= nv;
      w.col(j) *= nv;
    }
  }
  std::vector<Index> order(static_cast<std::size_t>(w.cols()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return w.col(a).norm() > w.col(b).norm(); });
  Matrix ws(w.rows(), w.cols()), vs(v.rows(), v.cols());
  for (std::size_t j = 0; j < order.size(); ++j) {
    ws.col(static_cast<Index>(j)) = w.col(order[j]);
    vs.col(static_cast<Index>(j)) = v.col(order[j]);
  }
  return NmfFactors(std::move(ws), std::move(vs));
}

/// Mean cosine similarity of the optimal one-to-one column matching.
inline double nmf_performance(const Matrix& w_true, const Matrix& w_est) {
  if (w_true.rows() == 0 || w_est.rows() == 0) throw DataError("invalid input: zero-row matrix");
  if (w_true.rows() != w_est.rows()) throw DataError("invalid input: row counts differ");
  if (w_true.cols() == 0 || w_est.cols() == 0) throw DataError("invalid input: zero-column matrix");
  Matrix sim(w_true.cols(), w_est.cols());
  for (Index i = 0; i < w_true.cols(); ++i) {
    const double ni = w_true.col(i).norm();
    for (Index j = 0; j < w_est.cols(); ++j) {
      const double nj = w_est.col(j).norm();
      sim(i, j) = (ni > 0.0 && nj > 0.0) ? w_true.col(i).dot(w_est.col(j)) / (ni * nj) : 0.0;
    }
  }
  const Assignment a = max_weight_assignment(sim);
  const auto pairs = static_cast<double>(std::min(w_true.cols(), w_est.cols()));
  return std::clamp(a.total / pairs, 0.0, 1.0);
}

/// Centered contrast over its permutation EGC.
inline double nmf_generic_ratio(const NmfFactors& f) {
  if (f.components() < 3)
    throw DegenerateError("degenerate diagnostic: NMF generic ratio needs n >= 3 (n = 2 is identically 1)");
  const double egc = genericity::egc_nmf(f);
  if (!(egc > 0.0)) throw DegenerateError("degenerate diagnostic: centered factors vanish");
  return genericity::generic_ratio(contrasts::nmf_centered_contrast(f), egc);
}

/// Null distribution of the centered contrast under random column permutations of W.
inline std::vector<double> nmf_permutation_null(const NmfFactors& f, std::size_t n_samples, Rng& rng) {
  const auto est = genericity::egc_monte_carlo(
      [&](Rng& r) { return groups::sample_permutation(static_cast<std::size_t>(f.components()), r); },
      [&](const groups::Permutation& p) {
        return contrasts::nmf_centered_contrast(NmfFactors(p.permute_columns(f.w()), f.v()));
      },
      n_samples, rng);
  return est.samples;
}

}  // namespace icm::latent
