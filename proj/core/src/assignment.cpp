#include "autolabel/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "autolabel/error.hpp"

namespace autolabel {
namespace {

// Square min-cost assignment; returns row -> column.
std::vector<int> SolveSquare(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials formulation; column 0 is a sentinel.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
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
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

Assignment HungarianAssign(const Eigen::MatrixXd& cost, const FeasibilityMask& feasible) {
  if (cost.rows() != feasible.rows() || cost.cols() != feasible.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "cost and feasibility mask differ in shape");
  }
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  Assignment result;
  if (rows == 0 || cols == 0) {
    for (int r = 0; r < rows; ++r) result.unmatched_rows.push_back(r);
    for (int c = 0; c < cols; ++c) result.unmatched_cols.push_back(c);
    return result;
  }

  // Any single infeasible/padding pick must outweigh every feasible total.
  double feasible_sum = 0.0;
  double min_cost = 0.0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!feasible(r, c)) continue;
      if (!std::isfinite(cost(r, c))) {
        throw Error(ErrorCode::kData, "feasible cost entries must be finite");
      }
      feasible_sum += std::abs(cost(r, c));
      min_cost = std::min(min_cost, cost(r, c));
    }
  }
  const double big = 1.0 + 2.0 * feasible_sum;
  const int n = std::max(rows, cols);
  Eigen::MatrixXd square = Eigen::MatrixXd::Constant(n, n, big);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      // Shift so all feasible entries are non-negative.
      if (feasible(r, c)) square(r, c) = cost(r, c) - min_cost;
    }
  }

  const std::vector<int> row_to_col = SolveSquare(square);
  std::vector<char> col_used(cols, 0);
  for (int r = 0; r < rows; ++r) {
    const int c = row_to_col[r];
    if (c >= 0 && c < cols && feasible(r, c)) {
      result.pairs.emplace_back(r, c);
      result.total_cost += cost(r, c);
      col_used[c] = 1;
    } else {
      result.unmatched_rows.push_back(r);
    }
  }
  for (int c = 0; c < cols; ++c) {
    if (!col_used[c]) result.unmatched_cols.push_back(c);
  }
  return result;
}

Assignment HungarianAssign(const Eigen::MatrixXd& cost) {
  return HungarianAssign(cost, FeasibilityMask::Constant(cost.rows(), cost.cols(), true));
}

}  // namespace autolabel
