#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scenforge/trajectory.hpp"

namespace scenforge::metrics
{

/// Classic DTW over the full warping window with Euclidean local cost between
/// 2-D points. Returns the unnormalized optimal path cost. Throws
/// ValidationError on empty input.
double dtw(const Trajectory & a, const Trajectory & b);

/// Rows are the generated set (M), columns the real set (N).
struct DistanceMatrix
{
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;
  Eigen::MatrixXd d;

  Eigen::Index rows() const { return d.rows(); }
  Eigen::Index cols() const { return d.cols(); }
};

/// d(i, j) = dtw(gs_i, rs_j). Rows are spread over `threads` workers
/// (0 = hardware concurrency); each cell is written by exactly one worker, so
/// the result does not depend on the thread count.
DistanceMatrix pairwise_matrix(const Dataset & gs, const Dataset & rs, unsigned threads = 0);

}  // namespace scenforge::metrics
