#pragma once

// Trace Method for linear multivariate pairs Y := M X + E.

#include <cmath>
#include <cstddef>
#include <string>

#include "icm/contrasts.hpp"
#include "icm/error.hpp"
#include "icm/linalg.hpp"
#include "icm/pairwise/verdict.hpp"

namespace icm::pairwise {

struct LinearPairModel {
  Matrix m;                    // m×n structure matrix
  CovarianceMatrix sigma_x;    // n×n
  CovarianceMatrix sigma_e;    // m×m

  LinearPairModel(Matrix mechanism, CovarianceMatrix cause, CovarianceMatrix noise)
      : m(std::move(mechanism)), sigma_x(std::move(cause)), sigma_e(std::move(noise)) {
    if (sigma_x.dim() != m.cols() || sigma_e.dim() != m.rows())
      throw ConfigError("shape error: LinearPairModel dimensions are inconsistent");
  }
};

inline double condition_number_spd(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

inline double condition_number(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || !(sv(sv.size() - 1) > 0.0)) return std::numeric_limits<double>::infinity();
  return sv(0) / sv(sv.size() - 1);
}

/// Ordinary least squares of y on x (rows are samples). Covariances use the
/// 1/(N−1) normalization after mean removal.
inline LinearPairModel fit_linear_pair(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows()) throw DataError("x and y must have the same number of samples");
  const Index n_samples = x.rows();
  if (n_samples <= std::max(x.cols(), y.cols()) + 1)
    throw DataError("ill-conditioned data: need more samples than max(n, m) + 1");
  const Matrix xc = x.rowwise() - x.colwise().mean();
  const Matrix yc = y.rowwise() - y.colwise().mean();
  const double norm = 1.0 / static_cast<double>(n_samples - 1);
  Matrix sxx = norm * (xc.transpose() * xc);
  sxx = 0.5 * (sxx + sxx.transpose());
  if (condition_number_spd(sxx) >= 1e12)
    throw DataError("ill-conditioned data: empirical cause covariance is singular");
  const Matrix sxy = norm * (xc.transpose() * yc);
  Matrix m = sxx.ldlt().solve(sxy).transpose();
  const Matrix resid = yc - xc * m.transpose();
  Matrix see = norm * (resid.transpose() * resid);
  see = 0.5 * (see + see.transpose());
  return LinearPairModel(std::move(m), CovarianceMatrix::unchecked(std::move(sxx)),
                         CovarianceMatrix::unchecked(std::move(see)));
}

/// τ_m(M Σ_X Mᵀ) / (τ_n(Σ_X) τ_m(MMᵀ)), the noiseless generic ratio.
inline double trace_condition_ratio(const Matrix& m, const Matrix& sigma_x) {
  const double num = contrasts::normalized_trace(Matrix(m * sigma_x * m.transpose()));
  const double den = contrasts::normalized_trace(sigma_x) *
                     contrasts::normalized_trace(Matrix(m * m.transpose()));
  if (!(std::abs(den) > 0.0)) throw DegenerateError("degenerate model: zero trace denominator");
  return num / den;
}

inline double trace_condition_ratio(const LinearPairModel& model) {
  return trace_condition_ratio(model.m, model.sigma_x.matrix());
}

/// Anticausal model of a noiseless square pair: mechanism M⁻¹ acting on Σ_Y = M Σ_X Mᵀ.
inline LinearPairModel noiseless_backward_model(const LinearPairModel& forward) {
  if (forward.m.rows() != forward.m.cols())
    throw ConfigError("not applicable: backward model needs a square mechanism");
  Eigen::FullPivLU<Matrix> lu(forward.m);
  if (!lu.isInvertible()) throw DegenerateError("degenerate model: mechanism is singular");
  const Matrix sy = forward.m * forward.sigma_x.matrix() * forward.m.transpose();
  const Index n = forward.m.rows();
  return LinearPairModel(lu.inverse(), CovarianceMatrix::unchecked(0.5 * (sy + sy.transpose())),
                         CovarianceMatrix::zero(n));
}

/// n² / (tr(MMᵀ) tr((MMᵀ)⁻¹)): product of forward and backward ratios of
/// any noiseless square pair with mechanism M.
inline double forward_backward_product(const Matrix& m) {
  const Index n = m.rows();
  const Matrix mmt = m * m.transpose();
  const Matrix inv = mmt.ldlt().solve(Matrix::Identity(n, n));
  return static_cast<double>(n * n) / (mmt.trace() * inv.trace());
}

inline constexpr double kDefaultDecisionThreshold = 0.01;

/// Fits x→y and y→x by regression and compares their trace ratios.
inline DirectionVerdict infer_direction_trace(const Matrix& x, const Matrix& y,
                                              double threshold = kDefaultDecisionThreshold) {
  if (x.cols() != y.cols())
    throw ConfigError("not applicable: Trace Method needs dim(x) == dim(y)");
  if (!(threshold >= 0.0)) throw ConfigError("decision threshold must be nonnegative");
  const LinearPairModel fwd = fit_linear_pair(x, y);
  const LinearPairModel bwd = fit_linear_pair(y, x);
  if (condition_number(fwd.m) >= 1e10 || condition_number(bwd.m) >= 1e10)
    throw DegenerateError("not applicable: fitted mechanism is singular");
  return decide(trace_condition_ratio(fwd), trace_condition_ratio(bwd), threshold);
}

}  // namespace icm::pairwise
