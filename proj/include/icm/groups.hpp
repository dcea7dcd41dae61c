#pragma once

// Generic groups: Haar samplers for O(n), SO(n), the symmetric group and the
// circle of frequency shifts, together with their exact actions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "icm/error.hpp"
#include "icm/linalg.hpp"
#include "icm/rng.hpp"
#include "icm/spectrum.hpp"
#include "icm/stats.hpp"

namespace icm::groups {

class OrthogonalMatrix {
 public:
  /// Validates UᵀU = I (Frobenius error ≤ 1e-10).
  explicit OrthogonalMatrix(Matrix u) : u_(std::move(u)) {
    if (u_.rows() != u_.cols() || u_.rows() == 0)
      throw ConfigError("orthogonal matrix must be square and non-empty");
    const Index n = u_.rows();
    if ((u_.transpose() * u_ - Matrix::Identity(n, n)).norm() > 1e-10)
      throw DataError("matrix is not orthogonal");
  }

  Index dim() const noexcept { return u_.rows(); }
  const Matrix& matrix() const noexcept { return u_; }
  double determinant() const { return u_.determinant(); }

  Vector apply(const Vector& x) const { return u_ * x; }
  /// U A Uᵀ
  Matrix conjugate(const Matrix& a) const { return u_ * a * u_.transpose(); }

  OrthogonalMatrix operator*(const OrthogonalMatrix& other) const {
    return unchecked(u_ * other.u_);
  }

  /// For callers that construct Q from a factorization and know it is orthogonal.
  static OrthogonalMatrix unchecked(Matrix u) { return OrthogonalMatrix(std::move(u), trusted{}); }

 private:
  struct trusted {};
  OrthogonalMatrix(Matrix u, trusted) : u_(std::move(u)) {}

  Matrix u_;
};

/// Permutation of {0..n-1} stored as an index map. Its matrix P sends the
/// basis vector e_j to e_{map[j]}.
class Permutation {
 public:
  explicit Permutation(std::vector<std::size_t> map) : map_(std::move(map)) {
    if (map_.empty()) throw ConfigError("permutation size must be at least 1");
    std::vector<bool> seen(map_.size(), false);
    for (std::size_t v : map_) {
      if (v >= map_.size() || seen[v]) throw DataError("permutation map is not a bijection");
      seen[v] = true;
    }
  }

  static Permutation identity(std::size_t n) {
    std::vector<std::size_t> m(n);
    std::iota(m.begin(), m.end(), std::size_t{0});
    return Permutation(std::move(m));
  }

  std::size_t size() const noexcept { return map_.size(); }
  std::size_t operator[](std::size_t i) const { return map_[i]; }
  const std::vector<std::size_t>& map() const noexcept { return map_; }

  Matrix matrix() const {
    const auto n = static_cast<Index>(map_.size());
    Matrix p = Matrix::Zero(n, n);
    for (std::size_t j = 0; j < map_.size(); ++j)
      p(static_cast<Index>(map_[j]), static_cast<Index>(j)) = 1.0;
    return p;
  }

  /// P A Pᵀ without forming P.
  Matrix conjugate(const Matrix& a) const {
    const auto n = static_cast<Index>(map_.size());
    if (a.rows() != n || a.cols() != n) throw ConfigError("conjugate: shape mismatch");
    Matrix out(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        out(static_cast<Index>(map_[i]), static_cast<Index>(map_[j])) = a(i, j);
    return out;
  }

  /// M Pᵀ: column j of M moves to column map[j].
  Matrix permute_columns(const Matrix& m) const {
    if (m.cols() != static_cast<Index>(map_.size()))
      throw ConfigError("permute_columns: shape mismatch");
    Matrix out(m.rows(), m.cols());
    for (std::size_t j = 0; j < map_.size(); ++j)
      out.col(static_cast<Index>(map_[j])) = m.col(static_cast<Index>(j));
    return out;
  }

  Permutation operator*(const Permutation& rhs) const {
    if (rhs.size() != size()) throw ConfigError("composing permutations of different sizes");
    std::vector<std::size_t> m(size());
    for (std::size_t i = 0; i < size(); ++i) m[i] = map_[rhs.map_[i]];
    return Permutation(std::move(m));
  }

  Permutation inverse() const {
    std::vector<std::size_t> m(size());
    for (std::size_t i = 0; i < size(); ++i) m[map_[i]] = i;
    return Permutation(std::move(m));
  }

  bool operator==(const Permutation&) const = default;

 private:
  std::vector<std::size_t> map_;
};

class CircularShift {
 public:
  CircularShift(double period, double offset) : period_(period), offset_(offset) {
    if (!(period > 0.0)) throw ConfigError("circular shift period must be positive");
    if (!(offset >= 0.0 && offset < period))
      throw ConfigError("circular shift offset must lie in [0, period)");
  }

  double period() const noexcept { return period_; }
  double offset() const noexcept { return offset_; }

  CircularShift operator*(const CircularShift& rhs) const {
    if (rhs.period_ != period_) throw ConfigError("composing shifts with different periods");
    double o = std::fmod(offset_ + rhs.offset_, period_);
    if (o < 0.0) o += period_;
    if (o >= period_) o = 0.0;
    return {period_, o};
  }

 private:
  double period_;
  double offset_;
};

inline std::string describe(const OrthogonalMatrix& u) {
  std::ostringstream os;
  os << "orthogonal matrix (n=" << u.dim() << ") [" << u.matrix().reshaped().transpose() << "]";
  return os.str();
}

inline std::string describe(const Permutation& p) {
  std::ostringstream os;
  os << "permutation [";
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? " " : "") << p[i];
  os << "]";
  return os.str();
}

inline std::string describe(const CircularShift& s) {
  std::ostringstream os;
  os << "circular shift (period=" << s.period() << ", offset=" << s.offset() << ")";
  return os.str();
}

/// Haar-distributed element of O(n): Gaussian matrix, QR, then the columns of
/// Q are multiplied by the signs of R's diagonal.
inline OrthogonalMatrix sample_orthogonal(Index n, Rng& rng) {
  if (n < 1) throw ConfigError("invalid dimension: orthogonal sampler needs n >= 1");
  Matrix g(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix& r = qr.matrixQR();
  for (Index j = 0; j < n; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return OrthogonalMatrix::unchecked(std::move(q));
}

/// Haar-distributed element of SO(n). Negating the first column is a fixed
/// measure-preserving bijection between the two cosets of SO(n) in O(n).
inline OrthogonalMatrix sample_special_orthogonal(Index n, Rng& rng) {
  OrthogonalMatrix u = sample_orthogonal(n, rng);
  if (u.determinant() < 0.0) {
    Matrix m = u.matrix();
    m.col(0) = -m.col(0);
    return OrthogonalMatrix::unchecked(std::move(m));
  }
  return u;
}

/// Uniform permutation (Fisher–Yates).
inline Permutation sample_permutation(std::size_t n, Rng& rng) {
  if (n < 1) throw ConfigError("invalid dimension: permutation size must be >= 1");
  std::vector<std::size_t> m(n);
  std::iota(m.begin(), m.end(), std::size_t{0});
  for (std::size_t i = n - 1; i > 0; --i) std::swap(m[i], m[rng.below(i + 1)]);
  return Permutation(std::move(m));
}

inline constexpr std::size_t kMaxEnumeratedPermutation = 8;

/// All n! permutations in lexicographic order of their maps.
inline std::vector<Permutation> enumerate_permutations(std::size_t n) {
  if (n < 1) throw ConfigError("invalid dimension: permutation size must be >= 1");
  if (n > kMaxEnumeratedPermutation)
    throw ConfigError("size limit: enumerate_permutations supports n <= 8");
  std::vector<std::size_t> m(n);
  std::iota(m.begin(), m.end(), std::size_t{0});
  std::vector<Permutation> out;
  do {
    out.emplace_back(m);
  } while (std::next_permutation(m.begin(), m.end()));
  return out;
}

inline CircularShift sample_circular_shift(double period, Rng& rng) {
  if (!(period > 0.0)) throw ConfigError("invalid parameter: shift period must be positive");
  double o = period * rng.uniform();
  if (o >= period) o = 0.0;
  return {period, o};
}

/// Whole-bin shift count for a spectrum with the given number of bins.
inline std::size_t shift_in_bins(const CircularShift& shift, std::size_t bins) {
  const double dnu = 0.5 / static_cast<double>(bins);
  const auto k = static_cast<std::size_t>(std::llround(shift.offset() / dnu));
  return k % bins;
}

/// Rotates the positive-frequency bins by round(offset / Δν); the negative
/// half follows by evenness. Power is preserved exactly since values are
/// only reordered.
inline SampledPsd apply_shift_to_psd(const SampledPsd& psd, const CircularShift& shift) {
  if (std::abs(shift.period() - 0.5) > 1e-12)
    throw ConfigError("spectral shifts act modulo 1/2; period must be 0.5");
  const std::size_t bins = psd.bins();
  const std::size_t k = shift_in_bins(shift, bins);
  std::vector<double> out(bins);
  for (std::size_t b = 0; b < bins; ++b) out[(b + k) % bins] = psd[b];
  return SampledPsd(std::move(out));
}

inline double rotation_angle(const OrthogonalMatrix& u) {
  if (u.dim() != 2) throw ConfigError("rotation_angle is defined for 2x2 matrices");
  double a = std::atan2(u.matrix()(1, 0), u.matrix()(0, 0));
  if (a < 0.0) a += 2.0 * M_PI;
  return a;
}

}  // namespace icm::groups
