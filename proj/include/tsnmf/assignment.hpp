#pragma once

// Rectangular linear assignment (Kuhn-Munkres with potentials, O(n^2 m)).
// Based on the shortest-augmenting-path formulation from e-maxx / cp-algorithms.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "tsnmf/matrix.hpp"

namespace tsnmf {

struct Assignment {
  /// (row, col) pairs sorted by row; size min(rows, cols).
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

namespace detail {

// Requires rows <= cols. Returns col index per row.
inline std::vector<std::size_t> hungarian_min_wide(const DenseMatrix& cost) {
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  constexpr double inf = std::numeric_limits<double>::infinity();
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
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
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
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace detail

/// Minimum-cost one-to-one assignment of size min(rows, cols). Entries must be finite.
inline Assignment solve_assignment_min(const DenseMatrix& cost) {
  if (!all_finite(cost)) throw std::invalid_argument("assignment cost matrix must be finite");
  Assignment out;
  if (cost.rows() == 0 || cost.cols() == 0) return out;
  if (cost.rows() <= cost.cols()) {
    const auto cols = detail::hungarian_min_wide(cost);
    for (std::size_t r = 0; r < cols.size(); ++r) out.pairs.emplace_back(r, cols[r]);
  } else {
    const auto rows = detail::hungarian_min_wide(transpose(cost));
    for (std::size_t c = 0; c < rows.size(); ++c) out.pairs.emplace_back(rows[c], c);
    std::sort(out.pairs.begin(), out.pairs.end());
  }
  return out;
}

/// Maximum-total assignment, by negating the scores.
inline Assignment solve_assignment_max(const DenseMatrix& score) {
  DenseMatrix cost = score;
  for (double& x : cost.values()) x = -x;
  return solve_assignment_min(cost);
}

}  // namespace tsnmf
