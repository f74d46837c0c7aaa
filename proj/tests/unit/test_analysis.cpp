#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include <Eigen/Eigenvalues>

#include "scenforge/analysis/clustering.hpp"
#include "scenforge/analysis/outliers.hpp"
#include "scenforge/analysis/reduce.hpp"
#include "scenforge/errors.hpp"

namespace
{
using namespace scenforge;
using namespace scenforge::analysis;

Eigen::MatrixXd gaussian(Rng & rng, Eigen::Index r, Eigen::Index c)
{
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.normal();
  return m;
}

TEST(Pca, AxisAlignedDataRecoversAxes)
{
  Rng rng(1);
  Eigen::MatrixXd x = gaussian(rng, 400, 2);
  x.col(0) *= 5.0;
  const auto r = pca_fit_transform(x, 2);
  EXPECT_NEAR(std::abs(r.components(0, 0)), 1.0, 1e-2);
  EXPECT_NEAR(std::abs(r.components(1, 1)), 1.0, 1e-2);
}

TEST(Pca, RankOneExplainsEverything)
{
  Rng rng(2);
  Eigen::RowVectorXd dir = gaussian(rng, 1, 5);
  Eigen::MatrixXd x(30, 5);
  for (Eigen::Index i = 0; i < 30; ++i) x.row(i) = rng.normal() * dir;
  EXPECT_NEAR(pca_fit_transform(x, 2).explained_variance[0], 1.0, 1e-9);
}

TEST(Pca, FullReconstructionAndEigenOracle)
{
  Rng rng(3);
  const Eigen::MatrixXd x = gaussian(rng, 50, 10) * gaussian(rng, 10, 10);
  const auto r = pca_fit_transform(x, 10);
  const Eigen::MatrixXd back = (r.embedding.points * r.components.transpose()).rowwise() + r.mean;
  EXPECT_LT((back - x).cwiseAbs().maxCoeff(), 1e-8);

  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
  Eigen::EigenSolver<Eigen::MatrixXd> solver(cov);
  std::vector<double> eig;
  for (Eigen::Index i = 0; i < 10; ++i) eig.push_back(solver.eigenvalues()(i).real());
  std::sort(eig.rbegin(), eig.rend());
  const double total = std::accumulate(eig.begin(), eig.end(), 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_NEAR(r.explained_variance[i], eig[i] / total, 1e-9);
    EXPECT_GE(r.explained_variance[i], 0.0);
    if (i > 0) {
      EXPECT_LE(r.explained_variance[i], r.explained_variance[i - 1] + 1e-15);
    }
    sum += r.explained_variance[i];
  }
  EXPECT_LE(sum, 1.0 + 1e-9);
}

TEST(Pca, InvalidComponentCountRejected)
{
  Rng rng(4);
  const auto x = gaussian(rng, 5, 3);
  EXPECT_THROW(pca_fit_transform(x, 0), ValidationError);
  EXPECT_THROW(pca_fit_transform(x, 4), ValidationError);
  EXPECT_THROW(pca_fit_transform(gaussian(rng, 2, 3), 2), ValidationError);
}

TEST(Svd, CenteredDataMatchesPcaUpToSign)
{
  Rng rng(5);
  Eigen::MatrixXd x = gaussian(rng, 40, 4) * gaussian(rng, 4, 4);
  x = x.rowwise() - x.colwise().mean();
  const auto p = pca_fit_transform(x, 2).embedding.points;
  const auto s = svd_transform(x, 2);
  for (Eigen::Index c = 0; c < 2; ++c) {
    const double sign = p.col(c).dot(s.embedding.points.col(c)) >= 0.0 ? 1.0 : -1.0;
    EXPECT_LT((p.col(c) - sign * s.embedding.points.col(c)).cwiseAbs().maxCoeff(), 1e-8);
  }
  EXPECT_GE(s.singular_values[0], s.singular_values[1]);
}

TEST(Svd, ZeroMatrixGivesZeroEmbedding)
{
  EXPECT_TRUE(svd_transform(Eigen::MatrixXd::Zero(6, 3), 2).embedding.points.isZero(0.0));
}

TEST(Tsne, AffinitiesHitTargetPerplexity)
{
  Rng rng(6);
  const auto x = gaussian(rng, 60, 3);
  const auto p = conditional_affinities(squared_distances(x), 10.0, 1e-5);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    double h = 0.0;
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      if (p(i, j) > 0.0) h -= p(i, j) * std::log(p(i, j));
    }
    EXPECT_NEAR(h, std::log(10.0), 1e-4);
    EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-12);
  }
}

TEST(Tsne, DuplicatesBecomeMutualNearestNeighbors)
{
  Rng rng(7);
  Eigen::MatrixXd x = gaussian(rng, 40, 5);
  x.row(39) = x.row(3);
  TsneConfig cfg;
  cfg.perplexity = 5.0;
  cfg.iterations = 300;
  cfg.seed = 1;
  const auto y = tsne_embed(x, cfg).embedding.points;
  auto nearest = [&y](Eigen::Index i) {
    Eigen::Index best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < y.rows(); ++j) {
      if (j == i) continue;
      const double d = (y.row(i) - y.row(j)).squaredNorm();
      if (d < bd) {
        bd = d;
        best = j;
      }
    }
    return best;
  };
  EXPECT_EQ(nearest(3), 39);
  EXPECT_EQ(nearest(39), 3);
}

TEST(Tsne, KlNonIncreasingAfterExaggerationAndDeterministic)
{
  Rng rng(8);
  Eigen::MatrixXd x = gaussian(rng, 60, 4);
  x.topRows(30).array() += 4.0;
  TsneConfig cfg;
  cfg.perplexity = 10.0;
  cfg.iterations = 600;
  const auto a = tsne_embed(x, cfg);
  const auto b = tsne_embed(x, cfg);
  EXPECT_EQ(a.embedding.points, b.embedding.points);
  ASSERT_EQ(a.kl_trace.size(), 600u);
  for (std::size_t i = static_cast<std::size_t>(cfg.exaggeration_iters) + 50; i < a.kl_trace.size(); i += 50) {
    EXPECT_LE(a.kl_trace[i], a.kl_trace[i - 50] + 1e-6) << "window ending at " << i;
  }
  EXPECT_TRUE(a.embedding.points.allFinite());
}

TEST(Tsne, PerplexityTooLargeRejected)
{
  Rng rng(9);
  TsneConfig cfg;
  cfg.perplexity = 10.0;
  EXPECT_THROW(tsne_embed(gaussian(rng, 30, 2), cfg), ValidationError);
}

TEST(Dbscan, TwoSeparatedBlobs)
{
  Rng rng(10);
  Eigen::MatrixXd p(60, 2);
  for (Eigen::Index i = 0; i < 60; ++i) {
    p(i, 0) = (i < 30 ? 0.0 : 100.0) + 0.3 * rng.normal();
    p(i, 1) = 0.3 * rng.normal();
  }
  const auto l = dbscan(p, 2.0, 4);
  EXPECT_EQ(l.cluster_count(), 2);
  EXPECT_EQ(l.noise_count(), 0u);
  EXPECT_NE(l.labels[0], l.labels[59]);
}

TEST(Dbscan, AllNoiseWhenMinNeighborsExceedsSize)
{
  Rng rng(11);
  const auto l = dbscan(gaussian(rng, 10, 2), 0.5, 11);
  EXPECT_EQ(l.noise_count(), 10u);
  EXPECT_EQ(l.cluster_count(), 0);
  EXPECT_THROW(dbscan(gaussian(rng, 3, 2), 0.0, 2), ValidationError);
}

TEST(Dbscan, LabelsAreContiguousAndOrderInvariantUpToRenumbering)
{
  Rng rng(12);
  Eigen::MatrixXd p(120, 2);
  for (Eigen::Index i = 0; i < 120; ++i) {
    const double cx = static_cast<double>(i % 3) * 8.0;
    p(i, 0) = cx + rng.normal();
    p(i, 1) = rng.normal();
  }
  const auto a = dbscan(p, 1.2, 5);
  std::set<int> used(a.labels.begin(), a.labels.end());
  used.erase(kNoise);
  int expect = 0;
  for (int c : used) EXPECT_EQ(c, expect++);

  std::vector<Eigen::Index> perm(120);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  Eigen::MatrixXd q(120, 2);
  for (Eigen::Index i = 0; i < 120; ++i) q.row(i) = p.row(perm[static_cast<std::size_t>(i)]);
  const auto b = dbscan(q, 1.2, 5);
  // Noise membership and cluster count do not depend on visiting order.
  for (Eigen::Index i = 0; i < 120; ++i) {
    const int la = a.labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    const int lb = b.labels[static_cast<std::size_t>(i)];
    EXPECT_EQ(la == kNoise, lb == kNoise);
  }
  EXPECT_EQ(a.cluster_count(), b.cluster_count());
}

TEST(Consistency, PerfectAndRefinementCases)
{
  using L = ScenarioLabel;
  const std::vector<L> truth{L::CutIn, L::CutIn, L::DriveByLeft, L::DriveByLeft, L::DriveByRight, L::DriveByRight};
  const auto perfect = cluster_consistency({0, 0, 1, 1, 2, 2}, truth);
  EXPECT_EQ(perfect.purity, 1.0);
  EXPECT_TRUE(perfect.refinement);
  const auto five = cluster_consistency({0, 1, 2, 3, 4, 4}, truth);
  EXPECT_EQ(five.purity, 1.0);
  EXPECT_TRUE(five.refinement);
  const auto straddle = cluster_consistency({0, 0, 0, 1, 2, 2}, truth);
  EXPECT_FALSE(straddle.refinement);
  EXPECT_DOUBLE_EQ(straddle.purity, 5.0 / 6.0);
  const auto with_noise = cluster_consistency({0, kNoise, 1, 1, 2, kNoise}, truth);
  EXPECT_EQ(with_noise.purity, 1.0);
  EXPECT_THROW(cluster_consistency({0}, truth), ValidationError);
}

TEST(Balance, EqualizesToMedianClassSize)
{
  using L = ScenarioLabel;
  std::vector<L> labels;
  labels.insert(labels.end(), 50, L::CutIn);
  labels.insert(labels.end(), 20, L::DriveByLeft);
  labels.insert(labels.end(), 10, L::DriveByRight);
  Rng rng(1);
  const auto rows = balance_classes(labels, rng);
  std::map<L, int> counts;
  for (auto r : rows) ++counts[labels[r]];
  EXPECT_EQ(counts[L::CutIn], 20);
  EXPECT_EQ(counts[L::DriveByLeft], 20);
  EXPECT_EQ(counts[L::DriveByRight], 20);
}

TEST(Sweep, FindsSeparatingSetting)
{
  using L = ScenarioLabel;
  Rng rng(13);
  Eigen::MatrixXd p(90, 2);
  std::vector<L> truth;
  for (Eigen::Index i = 0; i < 90; ++i) {
    const int k = static_cast<int>(i / 30);
    p(i, 0) = 20.0 * k + rng.normal();
    p(i, 1) = rng.normal();
    truth.push_back(k == 0 ? L::CutIn : (k == 1 ? L::DriveByLeft : L::DriveByRight));
  }
  const auto s = dbscan_sweep(p, truth, SweepConfig{});
  ASSERT_GE(s.best, 0);
  const auto & row = s.rows[static_cast<std::size_t>(s.best)];
  EXPECT_TRUE(row.refinement);
  EXPECT_GE(row.purity, 0.9);
  EXPECT_GE(row.clusters, 3);
}

TEST(Outliers, ClosedFormAndDegenerateCases)
{
  const double ln2 = std::log(2.0);
  const auto s = outlier_probabilities({{"a", 0.0}, {"b", ln2}, {"c", 2 * ln2}});
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].id, "c");
  EXPECT_DOUBLE_EQ(s[0].prob, 1.0);
  EXPECT_NEAR(s[1].prob, 0.5, 1e-12);
  EXPECT_NEAR(s[2].prob, 0.25, 1e-12);
  EXPECT_EQ(outlier_probabilities({{"x", 3.0}})[0].prob, 1.0);
  for (const auto & o : outlier_probabilities({{"a", 1.0}, {"b", 1.0}, {"c", 1.0}})) EXPECT_EQ(o.prob, 1.0);
  EXPECT_THROW(outlier_probabilities({}), ValidationError);
  EXPECT_THROW(outlier_probabilities({{"a", -1.0}}), ValidationError);
}

TEST(Outliers, ProbabilityStrictlyIncreasesWithLoss)
{
  Rng rng(14);
  std::vector<std::pair<std::string, double>> losses;
  for (int i = 0; i < 100; ++i) losses.emplace_back(std::to_string(i), rng.uniform(0.0, 5.0));
  const auto s = outlier_probabilities(losses);
  for (std::size_t i = 1; i < s.size(); ++i) {
    EXPECT_GE(s[i - 1].loss, s[i].loss);
    if (s[i - 1].loss > s[i].loss) {
      EXPECT_GT(s[i - 1].prob, s[i].prob);
    }
    EXPECT_GT(s[i].prob, 0.0);
    EXPECT_LE(s[i].prob, 1.0);
  }
}

}  // namespace
