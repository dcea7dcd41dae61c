#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "icm/error.hpp"
#include "icm/linalg.hpp"

namespace icm {

struct Assignment {
  std::vector<std::ptrdiff_t> row_to_col;  // -1 when the row is unmatched
  double total = 0.0;
};

/// Maximum-weight one-to-one matching on a rectangular score matrix
/// (Hungarian algorithm with potentials, O(n²m)). min(rows, cols) pairs
/// are matched.
inline Assignment max_weight_assignment(const Matrix& score) {
  const bool transposed = score.rows() > score.cols();
  const Matrix cost = transposed ? Matrix(-score.transpose()) : Matrix(-score);
  const auto n = static_cast<std::size_t>(cost.rows());
  const auto m = static_cast<std::size_t>(cost.cols());
  Assignment out;
  out.row_to_col.assign(static_cast<std::size_t>(score.rows()), -1);
  if (n == 0 || m == 0) return out;

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Index>(i0 - 1), static_cast<Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] == 0) continue;
    const std::size_t i = p[j] - 1, c = j - 1;
    if (transposed) {
      out.row_to_col[c] = static_cast<std::ptrdiff_t>(i);
      out.total += score(static_cast<Index>(c), static_cast<Index>(i));
    } else {
      out.row_to_col[i] = static_cast<std::ptrdiff_t>(c);
      out.total += score(static_cast<Index>(i), static_cast<Index>(c));
    }
  }
  return out;
}

}  // namespace icm
