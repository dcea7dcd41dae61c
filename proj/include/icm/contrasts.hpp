#pragma once

// Cause-mechanism contrasts: each is a pure function of an attribute
// (covariance, factor matrices, mixture parameters, power spectrum).

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <string>
#include <vector>

#include "icm/error.hpp"
#include "icm/linalg.hpp"
#include "icm/spectrum.hpp"
#include "icm/stats.hpp"

namespace icm {

class CovarianceMatrix {
 public:
  /// Checks symmetry and positive semidefiniteness (both to 1e-10, scaled by
  /// the matrix magnitude when it exceeds one).
  explicit CovarianceMatrix(Matrix s) : s_(std::move(s)) {
    if (s_.rows() != s_.cols() || s_.rows() == 0)
      throw ConfigError("covariance matrix must be square and non-empty");
    const double scale = std::max(1.0, s_.cwiseAbs().maxCoeff());
    if ((s_ - s_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
      throw DataError("covariance matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(s_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10 * scale)
      throw DataError("covariance matrix is not positive semidefinite");
  }

  static CovarianceMatrix identity(Index p) { return unchecked(Matrix::Identity(p, p)); }
  static CovarianceMatrix zero(Index p) { return unchecked(Matrix::Zero(p, p)); }
  static CovarianceMatrix diagonal(const Vector& d) {
    return CovarianceMatrix(Matrix(d.asDiagonal()));
  }

  /// Skips validation; for values produced by congruence Q S Qᵀ of a valid matrix.
  static CovarianceMatrix unchecked(Matrix s) {
    CovarianceMatrix c;
    c.s_ = std::move(s);
    return c;
  }

  Index dim() const noexcept { return s_.rows(); }
  const Matrix& matrix() const noexcept { return s_; }
  double trace() const { return s_.trace(); }

 private:
  CovarianceMatrix() = default;
  Matrix s_;
};

/// Nonnegative factors of X ≈ W Vᵀ: W is d×n, V is s×n.
class NmfFactors {
 public:
  NmfFactors(Matrix w, Matrix v) : w_(std::move(w)), v_(std::move(v)) {
    if (w_.cols() != v_.cols()) throw ConfigError("W and V must have the same column count");
    if (w_.cols() < 1 || w_.rows() < 1 || v_.rows() < 1)
      throw ConfigError("factor matrices must be non-empty");
    if (w_.minCoeff() < 0.0 || v_.minCoeff() < 0.0)
      throw DataError("NMF factors must be nonnegative");
  }

  Index components() const noexcept { return w_.cols(); }
  const Matrix& w() const noexcept { return w_; }
  const Matrix& v() const noexcept { return v_; }

 private:
  Matrix w_;
  Matrix v_;
};

class GaussianMixture {
 public:
  GaussianMixture(std::vector<double> weights, std::vector<Vector> means,
                  std::vector<CovarianceMatrix> covs)
      : weights_(std::move(weights)), means_(std::move(means)), covs_(std::move(covs)) {
    if (weights_.empty()) throw ConfigError("mixture needs at least one component");
    if (means_.size() != weights_.size() || covs_.size() != weights_.size())
      throw ConfigError("mixture weights, means and covariances disagree in count");
    const Index p = means_.front().size();
    if (p < 1) throw ConfigError("mixture dimension must be at least 1");
    stats::CompensatedSum total;
    for (std::size_t k = 0; k < weights_.size(); ++k) {
      if (!(weights_[k] >= 0.0)) throw DataError("mixture weights must be nonnegative");
      if (means_[k].size() != p || covs_[k].dim() != p)
        throw ConfigError("mixture components disagree in dimension");
      total.add(weights_[k]);
    }
    if (std::abs(total.value() - 1.0) > 1e-12) throw DataError("mixture weights must sum to 1");
  }

  std::size_t components() const noexcept { return weights_.size(); }
  Index dim() const noexcept { return means_.front().size(); }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<Vector>& means() const noexcept { return means_; }
  const std::vector<CovarianceMatrix>& covariances() const noexcept { return covs_; }

  Vector mean() const {
    Vector m = Vector::Zero(dim());
    for (std::size_t k = 0; k < weights_.size(); ++k) m += weights_[k] * means_[k];
    return m;
  }

  /// Copy with every mean shifted by the mixture mean Σ π_k μ_k.
  GaussianMixture centered() const {
    const Vector m = mean();
    std::vector<Vector> mu = means_;
    for (auto& v : mu) v -= m;
    return GaussianMixture(weights_, std::move(mu), covs_);
  }

  bool is_centered(double tol = 1e-8) const { return mean().norm() <= tol; }

 private:
  std::vector<double> weights_;
  std::vector<Vector> means_;
  std::vector<CovarianceMatrix> covs_;
};

namespace contrasts {

/// A contrast maps an attribute to a real value, C(a).
template <class C, class Attribute>
concept Contrast = requires(const C& c, const Attribute& a) {
  { c(a) } -> std::convertible_to<double>;
};

/// tr(Σ)/p
inline double normalized_trace(const Matrix& s) {
  if (s.rows() != s.cols() || s.rows() == 0) throw ConfigError("normalized_trace: square matrix expected");
  return s.trace() / static_cast<double>(s.rows());
}
inline double normalized_trace(const CovarianceMatrix& s) { return normalized_trace(s.matrix()); }

/// Subtracts the mean column from each column.
inline Matrix center_columns(const Matrix& m) {
  return m.colwise() - m.rowwise().mean();
}

inline void require_nondegenerate(const NmfFactors& f) {
  if (f.components() < 2)
    throw DegenerateError("degenerate factorization: centered contrast needs n >= 2 components");
}

/// tr[W̃ᵀW̃ ṼᵀṼ] on column-centered factors.
inline double nmf_centered_contrast(const NmfFactors& f) {
  require_nondegenerate(f);
  const Matrix wc = center_columns(f.w());
  const Matrix vc = center_columns(f.v());
  const Matrix gw = wc.transpose() * wc;
  const Matrix gv = vc.transpose() * vc;
  return (gw.cwiseProduct(gv)).sum();  // tr(A B) for symmetric A, B
}

inline void require_centered(const GaussianMixture& g) {
  if (!g.is_centered())
    throw ConfigError("precondition: mixture must be centered (|sum pi_k mu_k| <= 1e-8)");
}

/// E‖X‖⁴ for a Gaussian mixture, using vanishing fourth cumulants of each
/// component: Σ π (‖μ‖⁴ + (trΣ)² + 2tr(Σ²) + 4μᵀΣμ + 2‖μ‖²trΣ).
inline double mixture_quartic_contrast_unchecked(const GaussianMixture& g) {
  stats::CompensatedSum acc;
  for (std::size_t k = 0; k < g.components(); ++k) {
    const Vector& mu = g.means()[k];
    const Matrix& s = g.covariances()[k].matrix();
    const double m2 = mu.squaredNorm();
    const double tr = s.trace();
    const double tr2 = s.cwiseProduct(s).sum();
    const double q = mu.dot(s * mu);
    acc.add(g.weights()[k] * (m2 * m2 + tr * tr + 2.0 * tr2 + 4.0 * q + 2.0 * m2 * tr));
  }
  return acc.value();
}

inline double mixture_quartic_contrast(const GaussianMixture& g) {
  require_centered(g);
  return mixture_quartic_contrast_unchecked(g);
}

/// Mean of ‖x_i‖⁴ over the rows of `samples` (one sample per row). Callers
/// center the samples first.
inline double empirical_quartic_contrast(const Matrix& samples) {
  if (samples.rows() == 0) throw DataError("empty data: no samples");
  stats::CompensatedSum acc;
  for (Index i = 0; i < samples.rows(); ++i) {
    const double r2 = samples.row(i).squaredNorm();
    acc.add(r2 * r2);
  }
  return acc.value() / static_cast<double>(samples.rows());
}

/// 2 Δν Σ_b S(b): integral over [-1/2, 1/2) of the even spectrum.
inline double total_power(const SampledPsd& psd) {
  return 2.0 * psd.delta_nu() * stats::sum(psd.values());
}

struct NormalizedTrace {
  double operator()(const Matrix& s) const { return normalized_trace(s); }
};
struct NmfCenteredContrast {
  double operator()(const NmfFactors& f) const { return nmf_centered_contrast(f); }
};
struct MixtureQuarticContrast {
  double operator()(const GaussianMixture& g) const { return mixture_quartic_contrast(g); }
};
struct TotalPower {
  double operator()(const SampledPsd& s) const { return total_power(s); }
};

}  // namespace contrasts
}  // namespace icm
