#include "scenforge/analysis/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "scenforge/analysis/reduce.hpp"
#include "scenforge/errors.hpp"

namespace scenforge::analysis
{

int ClusterLabels::cluster_count() const
{
  int top = -1;
  for (int l : labels) top = std::max(top, l);
  return top + 1;
}

std::size_t ClusterLabels::noise_count() const
{
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kNoise));
}

ClusterLabels dbscan(const Eigen::MatrixXd & points, double eps, int min_neighbors)
{
  if (!(eps > 0.0) || min_neighbors < 1) {
    throw ValidationError("dbscan needs eps > 0 and min_neighbors >= 1");
  }
  const Eigen::Index n = points.rows();
  const double eps2 = eps * eps;
  std::vector<std::vector<Eigen::Index>> neighbors(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if ((points.row(i) - points.row(j)).squaredNorm() <= eps2) neighbors[static_cast<std::size_t>(i)].push_back(j);
    }
  }
  auto is_core = [&](Eigen::Index i) {
    return static_cast<int>(neighbors[static_cast<std::size_t>(i)].size()) >= min_neighbors;
  };

  constexpr int kUnvisited = -2;
  ClusterLabels out;
  out.eps = eps;
  out.min_neighbors = min_neighbors;
  out.labels.assign(static_cast<std::size_t>(n), kUnvisited);
  int next = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto & li = out.labels[static_cast<std::size_t>(i)];
    if (li != kUnvisited) continue;
    if (!is_core(i)) {
      li = kNoise;
      continue;
    }
    const int cluster = next++;
    li = cluster;
    std::deque<Eigen::Index> frontier{i};
    while (!frontier.empty()) {
      const Eigen::Index p = frontier.front();
      frontier.pop_front();
      if (!is_core(p)) continue;
      for (Eigen::Index q : neighbors[static_cast<std::size_t>(p)]) {
        auto & lq = out.labels[static_cast<std::size_t>(q)];
        if (lq == kUnvisited || lq == kNoise) {
          const bool fresh = lq == kUnvisited;
          lq = cluster;
          if (fresh) frontier.push_back(q);
        }
      }
    }
  }
  return out;
}

Consistency cluster_consistency(const std::vector<int> & pred, const std::vector<ScenarioLabel> & truth)
{
  if (pred.size() != truth.size()) {
    throw ValidationError(fmt::format("cluster labels ({}) and truth labels ({}) differ in length", pred.size(),
                                      truth.size()));
  }
  Consistency c;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == kNoise) continue;
    ++c.contingency[pred[i]][truth[i]];
    ++assigned;
  }
  std::size_t majority = 0;
  c.refinement = !c.contingency.empty();
  for (const auto & [cluster, counts] : c.contingency) {
    std::size_t best = 0;
    for (const auto & [label, count] : counts) best = std::max(best, count);
    majority += best;
    if (counts.size() != 1) c.refinement = false;
  }
  c.purity = assigned == 0 ? 0.0 : static_cast<double>(majority) / static_cast<double>(assigned);
  return c;
}

std::vector<std::size_t> balance_classes(const std::vector<ScenarioLabel> & labels, Rng & rng)
{
  std::map<ScenarioLabel, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  if (by_class.empty()) return {};
  std::vector<std::size_t> sizes;
  for (const auto & [label, members] : by_class) sizes.push_back(members.size());
  std::sort(sizes.begin(), sizes.end());
  // Lower median for an even class count.
  const std::size_t target = sizes[(sizes.size() - 1) / 2];

  std::vector<std::size_t> out;
  for (const auto & [label, members] : by_class) {
    if (members.size() >= target) {
      auto picked = sample_indices(members.size(), target, rng);
      std::sort(picked.begin(), picked.end());
      for (auto k : picked) out.push_back(members[k]);
    } else {
      out.insert(out.end(), members.begin(), members.end());
      for (std::size_t k = members.size(); k < target; ++k) out.push_back(members[rng.index(members.size())]);
    }
  }
  return out;
}

std::vector<double> default_eps_grid(const Eigen::MatrixXd & points)
{
  const Eigen::Index n = points.rows();
  if (n < 2) return {1.0};
  const Eigen::MatrixXd d2 = squared_distances(points);
  std::vector<double> nearest;
  for (Eigen::Index i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) best = std::min(best, d2(i, j));
    }
    nearest.push_back(std::sqrt(best));
  }
  std::nth_element(nearest.begin(), nearest.begin() + static_cast<std::ptrdiff_t>(nearest.size() / 2), nearest.end());
  const double base = std::max(nearest[nearest.size() / 2], 1e-9);
  std::vector<double> grid;
  for (double f : {1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0}) grid.push_back(f * base);
  return grid;
}

SweepResult dbscan_sweep(
  const Eigen::MatrixXd & points, const std::vector<ScenarioLabel> & truth, const SweepConfig & cfg)
{
  const std::vector<double> eps = cfg.eps.empty() ? default_eps_grid(points) : cfg.eps;
  SweepResult s;
  for (double e : eps) {
    for (int mn : cfg.min_neighbors) {
      const ClusterLabels labels = dbscan(points, e, mn);
      const Consistency c = cluster_consistency(labels.labels, truth);
      SweepRow row;
      row.eps = e;
      row.min_neighbors = mn;
      row.clusters = labels.cluster_count();
      row.noise_fraction =
        labels.labels.empty() ? 0.0 : static_cast<double>(labels.noise_count()) / static_cast<double>(labels.labels.size());
      row.purity = c.purity;
      row.refinement = c.refinement;
      s.rows.push_back(row);
    }
  }
  auto better = [](const SweepRow & a, const SweepRow & b) {
    if (a.refinement != b.refinement) return a.refinement;
    if (a.purity != b.purity) return a.purity > b.purity;
    return a.noise_fraction < b.noise_fraction;
  };
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    const auto & r = s.rows[i];
    if (r.clusters < cfg.min_clusters || r.noise_fraction > cfg.max_noise_fraction) continue;
    if (s.best < 0 || better(r, s.rows[static_cast<std::size_t>(s.best)])) s.best = static_cast<int>(i);
  }
  return s;
}

void write_sweep_csv(std::ostream & out, const SweepResult & s)
{
  out << "eps,min_neighbors,clusters,noise_fraction,purity,refinement,selected\n";
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    const auto & r = s.rows[i];
    out << fmt::format(
      "{:.17g},{},{},{:.17g},{:.17g},{},{}\n", r.eps, r.min_neighbors, r.clusters, r.noise_fraction, r.purity,
      r.refinement ? 1 : 0, static_cast<int>(i) == s.best ? 1 : 0);
  }
}

void write_contingency_csv(std::ostream & out, const Consistency & c)
{
  out << "cluster,truth_label,count\n";
  for (const auto & [cluster, counts] : c.contingency) {
    for (const auto & [label, count] : counts) out << fmt::format("{},{},{}\n", cluster, to_string(label), count);
  }
}

void write_embedding_csv(
  std::ostream & out, const std::vector<std::string> & ids, const Eigen::MatrixXd & points,
  const std::vector<int> & clusters, const std::vector<ScenarioLabel> & truth)
{
  const auto n = static_cast<std::size_t>(points.rows());
  if (ids.size() != n || clusters.size() != n || truth.size() != n || points.cols() < 1) {
    throw ShapeError("write_embedding_csv: inputs are not aligned");
  }
  out << "id,x,y,cluster,truth_label\n";
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double y = points.cols() > 1 ? points(r, 1) : 0.0;
    out << fmt::format("{},{:.17g},{:.17g},{},{}\n", ids[i], points(r, 0), y, clusters[i], to_string(truth[i]));
  }
}

}  // namespace scenforge::analysis
