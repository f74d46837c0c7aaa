#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace scenforge::analysis
{

enum class ReduceMethod { Pca, Svd, Tsne };

std::string to_string(ReduceMethod m);
ReduceMethod parse_reduce_method(const std::string & s);

/// One row per input latent.
struct Embedding
{
  ReduceMethod method{ReduceMethod::Pca};
  Eigen::MatrixXd points;
};

/// Stacks latent vectors as rows.
Eigen::MatrixXd stack_rows(const std::vector<Eigen::VectorXd> & rows);

struct PcaResult
{
  Embedding embedding;
  Eigen::RowVectorXd mean;
  // d x k, unit columns; each column's largest-magnitude entry is positive.
  Eigen::MatrixXd components;
  // Fraction of total variance per kept component, descending.
  std::vector<double> explained_variance;
};

/// Projection of mean-centred X onto the top-k covariance eigenvectors.
/// Needs 1 <= k <= dim and more rows than k; throws ValidationError otherwise.
PcaResult pca_fit_transform(const Eigen::MatrixXd & x, int k);

struct SvdResult
{
  Embedding embedding;
  Eigen::MatrixXd components;
  std::vector<double> singular_values;
};

/// Projection of the uncentred X onto its top-k right singular vectors.
SvdResult svd_transform(const Eigen::MatrixXd & x, int k);

struct TsneConfig
{
  double perplexity{30.0};
  int iterations{1000};
  double learning_rate{200.0};
  double early_exaggeration{12.0};
  int exaggeration_iters{250};
  double initial_momentum{0.5};
  double final_momentum{0.8};
  double entropy_tolerance{1e-4};
  std::uint64_t seed{0};
};

struct TsneResult
{
  Embedding embedding;
  // KL(P || Q) at the start of every iteration, using the unexaggerated P.
  std::vector<double> kl_trace;
};

/// Row-conditional Gaussian affinities: bandwidths found by bisection so each
/// row's entropy equals log(perplexity) within `tolerance`. Returns the n x n
/// conditional matrix (zero diagonal).
Eigen::MatrixXd conditional_affinities(const Eigen::MatrixXd & sq_dist, double perplexity, double tolerance);

/// Exact O(n^2) t-SNE to 2-D. Throws ValidationError when 3 * perplexity >= n.
TsneResult tsne_embed(const Eigen::MatrixXd & x, const TsneConfig & cfg);

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd & x);

}  // namespace scenforge::analysis
