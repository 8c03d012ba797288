#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

namespace autolabel {

using FeasibilityMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (row, col), sorted by row
  std::vector<int> unmatched_rows;
  std::vector<int> unmatched_cols;
  double total_cost = 0.0;
};

// Rectangular linear assignment (Hungarian method with potentials, O(n^3)).
// Infeasible entries are never assigned. Among matchings of maximum
// cardinality over feasible pairs the one with minimum total cost is returned,
// so no feasible (row, col) pair is left with both ends unmatched.
Assignment HungarianAssign(const Eigen::MatrixXd& cost, const FeasibilityMask& feasible);

// All entries feasible.
Assignment HungarianAssign(const Eigen::MatrixXd& cost);

}  // namespace autolabel
