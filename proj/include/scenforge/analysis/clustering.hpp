#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scenforge/rng.hpp"
#include "scenforge/trajectory.hpp"

namespace scenforge::analysis
{

constexpr int kNoise = -1;

struct ClusterLabels
{
  std::vector<int> labels;
  double eps{0.0};
  int min_neighbors{0};

  int cluster_count() const;
  std::size_t noise_count() const;
};

/// Density clustering over the rows of `points` with Euclidean distance. A
/// point is core when at least `min_neighbors` points (itself included) lie
/// within eps. Clusters are numbered in discovery order; a border point joins
/// the first cluster that reaches it.
ClusterLabels dbscan(const Eigen::MatrixXd & points, double eps, int min_neighbors);

struct Consistency
{
  double purity{0.0};
  bool refinement{false};
  // cluster id -> truth label -> count, noise excluded.
  std::map<int, std::map<ScenarioLabel, std::size_t>> contingency;
};

/// Purity over non-noise points; refinement holds when every cluster contains
/// exactly one truth class. Throws ValidationError on a length mismatch.
Consistency cluster_consistency(const std::vector<int> & pred, const std::vector<ScenarioLabel> & truth);

/// Row indices after resampling every class to the median class size:
/// larger classes are subsampled uniformly, smaller ones keep all members and
/// are topped up by draws with replacement. Classes are visited in label order.
std::vector<std::size_t> balance_classes(const std::vector<ScenarioLabel> & labels, Rng & rng);

struct SweepRow
{
  double eps{0.0};
  int min_neighbors{0};
  int clusters{0};
  double noise_fraction{0.0};
  double purity{0.0};
  bool refinement{false};
};

struct SweepResult
{
  std::vector<SweepRow> rows;
  // Index into rows of the selected setting, or -1 when none is eligible.
  int best{-1};
};

struct SweepConfig
{
  std::vector<double> eps;
  std::vector<int> min_neighbors{5, 10, 15, 25};
  int min_clusters{3};
  double max_noise_fraction{0.2};
};

/// eps grid as multiples of the median nearest-neighbour distance.
std::vector<double> default_eps_grid(const Eigen::MatrixXd & points);

/// Runs dbscan over the grid. Eligible settings have at least min_clusters
/// clusters and at most max_noise_fraction noise; among them refinement wins,
/// then purity, then lower noise, then grid order.
SweepResult dbscan_sweep(
  const Eigen::MatrixXd & points, const std::vector<ScenarioLabel> & truth, const SweepConfig & cfg);

void write_sweep_csv(std::ostream & out, const SweepResult & s);
void write_contingency_csv(std::ostream & out, const Consistency & c);
/// id,x,y,cluster,truth_label rows; only the first two embedding columns are written.
void write_embedding_csv(
  std::ostream & out, const std::vector<std::string> & ids, const Eigen::MatrixXd & points,
  const std::vector<int> & clusters, const std::vector<ScenarioLabel> & truth);

}  // namespace scenforge::analysis
