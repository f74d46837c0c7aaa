#include "scenforge/metrics/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "scenforge/errors.hpp"

namespace scenforge::metrics
{

Assignment hungarian(const Eigen::MatrixXd & cost)
{
  if (cost.rows() != cost.cols()) {
    throw ValidationError(
      "hungarian needs a square matrix, got " + std::to_string(cost.rows()) + "x" + std::to_string(cost.cols()));
  }
  const auto n = static_cast<std::size_t>(cost.rows());
  Assignment result;
  if (n == 0) {
    return result;
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based potentials formulation; column 0 is a virtual source.
  std::vector<double> u(n + 1, 0.0);
  std::vector<double> v(n + 1, 0.0);
  std::vector<std::size_t> match_of_col(n + 1, 0);
  std::vector<std::size_t> way(n + 1, 0);
  for (std::size_t row = 1; row <= n; ++row) {
    match_of_col[0] = row;
    std::size_t col0 = 0;
    std::vector<double> min_to(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[col0] = true;
      const std::size_t r0 = match_of_col[col0];
      double delta = kInf;
      std::size_t col1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double reduced = cost(static_cast<Eigen::Index>(r0 - 1), static_cast<Eigen::Index>(j - 1)) - u[r0] - v[j];
        if (reduced < min_to[j]) {
          min_to[j] = reduced;
          way[j] = col0;
        }
        if (min_to[j] < delta) {
          delta = min_to[j];
          col1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match_of_col[j]] += delta;
          v[j] -= delta;
        } else {
          min_to[j] -= delta;
        }
      }
      col0 = col1;
    } while (match_of_col[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      match_of_col[col0] = match_of_col[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<std::size_t> col_of_row(n, 0);
  for (std::size_t j = 1; j <= n; ++j) col_of_row[match_of_col[j] - 1] = j - 1;
  for (std::size_t i = 0; i < n; ++i) {
    result.pairs.emplace_back(i, col_of_row[i]);
    result.total += cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col_of_row[i]));
  }
  return result;
}

double hungarian_truncated(std::span<const double> matched, double fraction)
{
  if (matched.empty()) {
    throw ValidationError("hungarian_truncated needs at least one matched distance");
  }
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ValidationError("truncation fraction must lie in (0, 1]");
  }
  // Guard against fraction * K landing a hair above an integer.
  const double scaled = fraction * static_cast<double>(matched.size());
  auto keep = static_cast<std::size_t>(std::ceil(scaled - 1e-9));
  keep = std::clamp<std::size_t>(keep, 1, matched.size());
  return std::accumulate(matched.begin(), matched.begin() + static_cast<std::ptrdiff_t>(keep), 0.0) /
         static_cast<double>(keep);
}

}  // namespace scenforge::metrics
