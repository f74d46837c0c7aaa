#include "scenforge/analysis/outliers.hpp"

#include <algorithm>
#include <map>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "scenforge/errors.hpp"

namespace scenforge::analysis
{

std::vector<OutlierScore> outlier_probabilities(const std::vector<std::pair<std::string, double>> & losses)
{
  if (losses.empty()) {
    throw ValidationError("outlier_probabilities needs at least one loss");
  }
  double top = 0.0;
  for (const auto & [id, loss] : losses) {
    if (!std::isfinite(loss) || loss < 0.0) {
      throw ValidationError(fmt::format("loss of '{}' must be finite and non-negative, got {}", id, loss));
    }
    top = std::max(top, loss);
  }
  std::vector<OutlierScore> out;
  out.reserve(losses.size());
  for (const auto & [id, loss] : losses) out.push_back({id, loss, std::exp(loss - top)});
  std::stable_sort(out.begin(), out.end(), [](const auto & a, const auto & b) { return a.prob > b.prob; });
  return out;
}

std::vector<std::pair<Trajectory, OutlierScore>> top_outliers(const Dataset & ds, const ae::AeModel & ae, std::size_t k)
{
  std::vector<std::pair<Trajectory, OutlierScore>> out;
  if (k == 0 || ds.empty()) return out;
  const auto losses = ae::reconstruction_losses(ae, ds);
  std::vector<std::pair<std::string, double>> named;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    named.emplace_back(ds.trajectories[i].id, losses[i]);
    index[ds.trajectories[i].id] = i;
  }
  const auto scores = outlier_probabilities(named);
  for (std::size_t i = 0; i < std::min(k, scores.size()); ++i) {
    out.emplace_back(ds.trajectories[index.at(scores[i].id)], scores[i]);
  }
  return out;
}

void write_outliers_csv(std::ostream & out, const std::vector<OutlierScore> & scores)
{
  out << "id,loss,prob\n";
  for (const auto & s : scores) out << fmt::format("{},{:.17g},{:.17g}\n", s.id, s.loss, s.prob);
}

}  // namespace scenforge::analysis
