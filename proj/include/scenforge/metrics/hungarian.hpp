#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace scenforge::metrics
{

struct Assignment
{
  // (row, col) pairs ordered by row.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double total{0.0};
};

/// Minimum-cost perfect matching on a square cost matrix (Kuhn-Munkres with
/// potentials, O(n^3)). Throws ValidationError for non-square input.
Assignment hungarian(const Eigen::MatrixXd & cost);

/// Mean of the smallest ceil(fraction * K) of the ascending `matched`
/// distances. fraction must lie in (0, 1]; the list must be non-empty.
double hungarian_truncated(std::span<const double> matched, double fraction = 0.75);

}  // namespace scenforge::metrics
