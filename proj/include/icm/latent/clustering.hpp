#pragma once

// Gaussian-mixture generative model, k-means and EM clustering, matching
// accuracy and the O(p) generic ratio of a fitted mixture.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
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

enum class ClusterAlgorithm { kmeans, gm_em };

inline std::string to_string(ClusterAlgorithm a) {
  return a == ClusterAlgorithm::kmeans ? "kmeans" : "gm-em";
}

inline ClusterAlgorithm parse_cluster_algorithm(const std::string& s) {
  if (s == "kmeans") return ClusterAlgorithm::kmeans;
  if (s == "gm-em" || s == "gm_em") return ClusterAlgorithm::gm_em;
  throw ConfigError("unknown clustering algorithm '" + s + "' (expected kmeans or gm-em)");
}

/// Group acting on the cluster means for the randomization null.
enum class MeanGroup { orthogonal, special_orthogonal };

struct ClusterExperimentConfig {
  std::size_t k = 5;
  Index p = 20;
  double mean_std = 2.0;
  double eigen_lo = 0.1;  // eigenvalues log-uniform on [eigen_lo, eigen_hi]
  double eigen_hi = 1.0;
  std::size_t samples_per_trial = 1000;
  ClusterAlgorithm algorithm = ClusterAlgorithm::kmeans;
  std::size_t n_trials = 100;
  double success_threshold = 0.99;
  std::uint64_t seed = 1;
  std::size_t max_iters = 500;
  double tol = 1e-7;
  std::size_t null_samples = 200;  // O(p) draws for the per-trial p-value; 0 disables
  MeanGroup group = MeanGroup::orthogonal;

  void validate() const {
    if (k < 2) throw ConfigError("cluster config: K must be >= 2");
    if (p < 2) throw ConfigError("cluster config: p must be >= 2");
    if (!(mean_std > 0.0)) throw ConfigError("cluster config: mean_std must be > 0");
    if (!(eigen_lo > 0.0 && eigen_hi >= eigen_lo))
      throw ConfigError("cluster config: need 0 < eigen_lo <= eigen_hi");
    if (samples_per_trial < k * static_cast<std::size_t>(p + 1))
      throw ConfigError("cluster config: samples_per_trial must be >= K (p + 1)");
    if (!(success_threshold >= 0.0 && success_threshold <= 1.0))
      throw ConfigError("cluster config: success_threshold must lie in [0, 1]");
    if (max_iters < 1) throw ConfigError("cluster config: max_iters must be >= 1");
    if (null_samples != 0 && null_samples < genericity::kMinNullSamples)
      throw ConfigError("cluster config: null_samples must be 0 or at least 20");
  }
};

struct GmmInstance {
  GaussianMixture truth;
  Matrix samples;                // N×p, one sample per row
  std::vector<std::size_t> labels;
};

/// Means ~ N(0, mean_std² I); covariances Q D Qᵀ with Q Haar on O(p) and D
/// log-uniform; equal weights.
inline GmmInstance generate_gmm_instance(const ClusterExperimentConfig& cfg, Rng& rng) {
  cfg.validate();
  const Index p = cfg.p;
  std::vector<double> weights(cfg.k, 1.0 / static_cast<double>(cfg.k));
  std::vector<Vector> means(cfg.k);
  std::vector<CovarianceMatrix> covs;
  std::vector<Matrix> factors(cfg.k);
  const double log_lo = std::log(cfg.eigen_lo), log_hi = std::log(cfg.eigen_hi);
  for (std::size_t c = 0; c < cfg.k; ++c) {
    means[c].resize(p);
    for (Index i = 0; i < p; ++i) means[c](i) = cfg.mean_std * rng.normal();
    const auto q = groups::sample_orthogonal(p, rng);
    Vector d(p);
    for (Index i = 0; i < p; ++i)
      d(i) = cfg.eigen_lo == cfg.eigen_hi ? cfg.eigen_lo : std::exp(rng.uniform(log_lo, log_hi));
    factors[c] = q.matrix() * d.cwiseSqrt().asDiagonal();
    Matrix s = q.matrix() * d.asDiagonal() * q.matrix().transpose();
    covs.push_back(CovarianceMatrix::unchecked(0.5 * (s + s.transpose())));
  }
  // Equal weights are exactly representable only up to rounding; renormalize the last.
  double rest = 1.0;
  for (std::size_t c = 0; c + 1 < cfg.k; ++c) rest -= weights[c];
  weights.back() = rest;

  GmmInstance inst{GaussianMixture(weights, means, covs), Matrix(cfg.samples_per_trial, p), {}};
  inst.labels.resize(cfg.samples_per_trial);
  Vector z(p);
  for (std::size_t i = 0; i < cfg.samples_per_trial; ++i) {
    const auto c = static_cast<std::size_t>(rng.below(cfg.k));
    inst.labels[i] = c;
    for (Index j = 0; j < p; ++j) z(j) = rng.normal();
    inst.samples.row(static_cast<Index>(i)) = (means[c] + factors[c] * z).transpose();
  }
  return inst;
}

struct ClusterFit {
  std::vector<std::size_t> labels;  // hard assignments
  Matrix responsibilities;          // N×K (one-hot for k-means)
  GaussianMixture mixture;
  std::vector<double> objective;    // k-means: within-cluster SS; EM: mean log-likelihood
  bool converged = false;
  bool degenerate = false;          // a cluster emptied or a covariance collapsed
};

namespace detail {

inline void check_samples(const Matrix& x, std::size_t k) {
  if (k < 1) throw ConfigError("clustering: K must be >= 1");
  if (x.rows() < static_cast<Index>(k) * (x.cols() + 1))
    throw DataError("invalid input: need at least K (p + 1) samples");
}

// Weights, means and ML (1/N_k) covariances from soft or hard memberships.
inline GaussianMixture moments(const Matrix& x, const Matrix& resp, bool* degenerate) {
  const Index n = x.rows(), p = x.cols(), k = resp.cols();
  std::vector<double> w(static_cast<std::size_t>(k));
  std::vector<Vector> mu(static_cast<std::size_t>(k));
  std::vector<CovarianceMatrix> cov;
  for (Index c = 0; c < k; ++c) {
    const double nk = resp.col(c).sum();
    w[static_cast<std::size_t>(c)] = nk / static_cast<double>(n);
    if (!(nk > 0.0)) {
      if (degenerate) *degenerate = true;
      mu[static_cast<std::size_t>(c)] = Vector::Zero(p);
      cov.push_back(CovarianceMatrix::zero(p));
      continue;
    }
    const Vector m = (x.transpose() * resp.col(c)) / nk;
    const Matrix xc = x.rowwise() - m.transpose();
    Matrix s = (xc.transpose() * resp.col(c).asDiagonal() * xc) / nk;
    mu[static_cast<std::size_t>(c)] = m;
    cov.push_back(CovarianceMatrix::unchecked(0.5 * (s + s.transpose())));
  }
  double total = 0.0;
  for (double v : w) total += v;
  for (double& v : w) v /= total;
  return GaussianMixture(std::move(w), std::move(mu), std::move(cov));
}

inline Matrix one_hot(const std::vector<std::size_t>& labels, std::size_t k) {
  Matrix r = Matrix::Zero(static_cast<Index>(labels.size()), static_cast<Index>(k));
  for (std::size_t i = 0; i < labels.size(); ++i)
    r(static_cast<Index>(i), static_cast<Index>(labels[i])) = 1.0;
  return r;
}

}  // namespace detail

/// k-means++ seeding followed by Lloyd iterations. Clusters that empty are
/// reseeded at the point farthest from its center.
inline ClusterFit kmeans(const Matrix& x, std::size_t k, std::size_t max_iters, Rng& rng) {
  detail::check_samples(x, k);
  const Index n = x.rows(), p = x.cols();
  const auto kk = static_cast<Index>(k);
  Matrix centers(kk, p);

  // k-means++
  centers.row(0) = x.row(static_cast<Index>(rng.below(static_cast<std::uint64_t>(n))));
  Vector d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (Index c = 1; c < kk; ++c) {
    const double total = d2.sum();
    Index pick = n - 1;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (Index i = 0; i < n; ++i) {
        target -= d2(i);
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    centers.row(c) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  ClusterFit fit{std::vector<std::size_t>(static_cast<std::size_t>(n), 0), Matrix(),
                 GaussianMixture({1.0}, {Vector::Zero(p)}, {CovarianceMatrix::zero(p)}), {}, false, false};
  std::vector<std::size_t>& labels = fit.labels;
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (std::size_t it = 0; it < max_iters; ++it) {
    bool changed = false;
    double objective = 0.0;
    for (Index i = 0; i < n; ++i) {
      std::size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (Index c = 0; c < kk; ++c) {
        const double dd = (x.row(i) - centers.row(c)).squaredNorm();
        if (dd < bd) {
          bd = dd;
          best = static_cast<std::size_t>(c);
        }
      }
      if (it == 0 || labels[static_cast<std::size_t>(i)] != best) changed = true;
      labels[static_cast<std::size_t>(i)] = best;
      dist[static_cast<std::size_t>(i)] = bd;
      objective += bd;
    }
    fit.objective.push_back(objective);
    if (!changed) {
      fit.converged = true;
      break;
    }
    std::vector<std::size_t> counts(k, 0);
    Matrix sums = Matrix::Zero(kk, p);
    for (Index i = 0; i < n; ++i) {
      const std::size_t c = labels[static_cast<std::size_t>(i)];
      ++counts[c];
      sums.row(static_cast<Index>(c)) += x.row(i);
    }
    for (Index c = 0; c < kk; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      } else {
        const auto far = static_cast<Index>(
            std::max_element(dist.begin(), dist.end()) - dist.begin());
        centers.row(c) = x.row(far);
        dist[static_cast<std::size_t>(far)] = 0.0;
      }
    }
  }
  fit.responsibilities = detail::one_hot(labels, k);
  fit.mixture = detail::moments(x, fit.responsibilities, &fit.degenerate);
  return fit;
}

inline double within_cluster_ss(const Matrix& x, const std::vector<std::size_t>& labels,
                                const GaussianMixture& g) {
  double ss = 0.0;
  for (Index i = 0; i < x.rows(); ++i)
    ss += (x.row(i).transpose() - g.means()[labels[static_cast<std::size_t>(i)]]).squaredNorm();
  return ss;
}

namespace detail {

// Floors covariance eigenvalues at 1e-6·tr/p; returns true when it had to.
inline bool regularize(Matrix& s) {
  const Index p = s.rows();
  const double floor = 1e-6 * std::max(s.trace(), 0.0) / static_cast<double>(p);
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  if (es.eigenvalues().minCoeff() >= floor && floor > 0.0) return false;
  const double f = floor > 0.0 ? floor : 1e-12;
  const Vector ev = es.eigenvalues().cwiseMax(f);
  s = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  s = 0.5 * (s + s.transpose());
  return true;
}

// Per-sample log-densities log π_k N(x_i; μ_k, Σ_k) into an N×K matrix.
inline Matrix log_joint(const Matrix& x, const GaussianMixture& g) {
  const Index n = x.rows(), p = x.cols();
  const auto k = static_cast<Index>(g.components());
  Matrix out(n, k);
  const double log2pi = std::log(2.0 * M_PI);
  for (Index c = 0; c < k; ++c) {
    const auto cs = static_cast<std::size_t>(c);
    Eigen::LLT<Matrix> llt(g.covariances()[cs].matrix());
    if (llt.info() != Eigen::Success) throw DegenerateError("covariance collapse in EM");
    const Matrix& l = llt.matrixL();
    const double logdet = 2.0 * l.diagonal().array().log().sum();
    const Matrix xc = (x.rowwise() - g.means()[cs].transpose()).transpose();  // p×N
    const Matrix z = llt.matrixL().solve(xc);
    const double lw = g.weights()[cs] > 0.0 ? std::log(g.weights()[cs])
                                             : -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i)
      out(i, c) = lw - 0.5 * (static_cast<double>(p) * log2pi + logdet + z.col(i).squaredNorm());
  }
  return out;
}

}  // namespace detail

/// Full-covariance EM initialized from k-means. Returns hard labels by
/// maximum responsibility as well as the responsibilities.
inline ClusterFit gmm_em(const Matrix& x, std::size_t k, std::size_t max_iters, double tol, Rng& rng) {
  detail::check_samples(x, k);
  ClusterFit fit = kmeans(x, k, max_iters, rng);
  fit.objective.clear();
  fit.converged = false;
  const Index n = x.rows();
  const auto kk = static_cast<Index>(k);

  auto regularized = [&](const GaussianMixture& g) {
    std::vector<CovarianceMatrix> covs;
    for (const auto& c : g.covariances()) {
      Matrix s = c.matrix();
      detail::regularize(s);
      covs.push_back(CovarianceMatrix::unchecked(std::move(s)));
    }
    return GaussianMixture(g.weights(), g.means(), std::move(covs));
  };

  GaussianMixture model = regularized(fit.mixture);
  Matrix resp(n, kk);
  try {
    for (std::size_t it = 0; it < max_iters; ++it) {
      const Matrix lj = detail::log_joint(x, model);
      double ll = 0.0;
      for (Index i = 0; i < n; ++i) {
        const double mx = lj.row(i).maxCoeff();
        const double lse = mx + std::log((lj.row(i).array() - mx).exp().sum());
        resp.row(i) = (lj.row(i).array() - lse).exp().matrix();
        ll += lse;
      }
      ll /= static_cast<double>(n);
      fit.objective.push_back(ll);
      if (fit.objective.size() >= 2 &&
          std::abs(ll - fit.objective[fit.objective.size() - 2]) < tol) {
        fit.converged = true;
        break;
      }
      bool empty = false;
      GaussianMixture next = detail::moments(x, resp, &empty);
      if (empty) {
        fit.degenerate = true;
        break;
      }
      model = regularized(next);
    }
  } catch (const DegenerateError&) {
    fit.degenerate = true;
  }
  fit.mixture = model;
  fit.responsibilities = resp;
  for (Index i = 0; i < n; ++i) {
    Index best = 0;
    resp.row(i).maxCoeff(&best);
    fit.labels[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
  }
  return fit;
}

inline ClusterFit fit_clusters(ClusterAlgorithm algo, const Matrix& x, std::size_t k,
                               std::size_t max_iters, double tol, Rng& rng) {
  return algo == ClusterAlgorithm::kmeans ? kmeans(x, k, max_iters, rng)
                                          : gmm_em(x, k, max_iters, tol, rng);
}

/// Accuracy under the best one-to-one relabeling (Hungarian on the confusion matrix).
inline double cluster_performance(const std::vector<std::size_t>& truth,
                                  const std::vector<std::size_t>& est) {
  if (truth.size() != est.size()) throw DataError("label sequences differ in length");
  if (truth.empty()) throw DataError("empty label sequences");
  const std::size_t kt = *std::max_element(truth.begin(), truth.end()) + 1;
  const std::size_t ke = *std::max_element(est.begin(), est.end()) + 1;
  Matrix confusion = Matrix::Zero(static_cast<Index>(kt), static_cast<Index>(ke));
  for (std::size_t i = 0; i < truth.size(); ++i)
    confusion(static_cast<Index>(truth[i]), static_cast<Index>(est[i])) += 1.0;
  return max_weight_assignment(confusion).total / static_cast<double>(truth.size());
}

/// Quartic contrast over its O(p) EGC, after centering the fit by its mixture mean.
inline double cluster_generic_ratio(const GaussianMixture& fit) {
  const GaussianMixture g = fit.centered();
  return genericity::generic_ratio(contrasts::mixture_quartic_contrast(g), genericity::egc_mixture(g));
}

/// Mixture contrast under random orthogonal transformations of the (centered) means.
inline std::vector<double> mixture_rotation_null(const GaussianMixture& fit, std::size_t n_samples,
                                                 MeanGroup group, Rng& rng) {
  const GaussianMixture g = fit.centered();
  const auto est = genericity::egc_monte_carlo(
      [&](Rng& r) {
        return group == MeanGroup::orthogonal ? groups::sample_orthogonal(g.dim(), r)
                                              : groups::sample_special_orthogonal(g.dim(), r);
      },
      [&](const groups::OrthogonalMatrix& u) {
        std::vector<Vector> mu;
        mu.reserve(g.components());
        for (const auto& m : g.means()) mu.push_back(u.apply(m));
        return contrasts::mixture_quartic_contrast_unchecked(
            GaussianMixture(g.weights(), std::move(mu), g.covariances()));
      },
      n_samples, rng);
  return est.samples;
}

}  // namespace icm::latent
