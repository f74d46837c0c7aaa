#include "scenforge/metrics/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "scenforge/errors.hpp"

namespace scenforge::metrics
{

double dtw(const Trajectory & a, const Trajectory & b)
{
  if (a.points.empty() || b.points.empty()) {
    throw ValidationError("dtw needs two non-empty trajectories");
  }
  const auto & p = a.points;
  const auto & q = b.points;
  const std::size_t m = q.size();
  auto cost = [&](std::size_t i, std::size_t j) { return std::hypot(p[i].lat - q[j].lat, p[i].lon - q[j].lon); };

  // Two rolling rows of the accumulated-cost table.
  std::vector<double> prev(m);
  std::vector<double> cur(m);
  prev[0] = cost(0, 0);
  for (std::size_t j = 1; j < m; ++j) prev[j] = prev[j - 1] + cost(0, j);
  for (std::size_t i = 1; i < p.size(); ++i) {
    cur[0] = prev[0] + cost(i, 0);
    for (std::size_t j = 1; j < m; ++j) {
      cur[j] = cost(i, j) + std::min({prev[j - 1], prev[j], cur[j - 1]});
    }
    std::swap(prev, cur);
  }
  return prev[m - 1];
}

DistanceMatrix pairwise_matrix(const Dataset & gs, const Dataset & rs, unsigned threads)
{
  if (gs.empty() || rs.empty()) {
    throw ValidationError("pairwise_matrix needs two non-empty sets");
  }
  DistanceMatrix dm;
  for (const auto & t : gs.trajectories) dm.row_ids.push_back(t.id);
  for (const auto & t : rs.trajectories) dm.col_ids.push_back(t.id);
  const auto rows = static_cast<Eigen::Index>(gs.size());
  const auto cols = static_cast<Eigen::Index>(rs.size());
  dm.d.resize(rows, cols);

  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = static_cast<unsigned>(std::min<Eigen::Index>(workers, rows));
  auto fill_rows = [&](Eigen::Index begin, Eigen::Index end) {
    for (Eigen::Index i = begin; i < end; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        dm.d(i, j) = dtw(gs.trajectories[static_cast<std::size_t>(i)], rs.trajectories[static_cast<std::size_t>(j)]);
      }
    }
  };
  if (workers <= 1) {
    fill_rows(0, rows);
    return dm;
  }
  std::vector<std::jthread> pool;
  const Eigen::Index per = (rows + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const Eigen::Index begin = std::min<Eigen::Index>(rows, w * per);
    const Eigen::Index end = std::min<Eigen::Index>(rows, begin + per);
    pool.emplace_back(fill_rows, begin, end);
  }
  return dm;
}

}  // namespace scenforge::metrics
