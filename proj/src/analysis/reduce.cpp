#include "scenforge/analysis/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "scenforge/errors.hpp"
#include "scenforge/rng.hpp"

namespace scenforge::analysis
{
namespace
{

void check_k(const Eigen::MatrixXd & x, int k)
{
  if (k < 1 || k > x.cols()) {
    throw ValidationError(fmt::format("component count {} must lie in [1, {}]", k, x.cols()));
  }
  if (x.rows() <= k) {
    throw ValidationError(fmt::format("need more than {} rows, got {}", k, x.rows()));
  }
}

// Makes each column's largest-magnitude entry positive so signs are reproducible.
void fix_signs(Eigen::MatrixXd & columns)
{
  for (Eigen::Index c = 0; c < columns.cols(); ++c) {
    Eigen::Index at = 0;
    columns.col(c).cwiseAbs().maxCoeff(&at);
    if (columns(at, c) < 0.0) columns.col(c) *= -1.0;
  }
}

}  // namespace

std::string to_string(ReduceMethod m)
{
  switch (m) {
    case ReduceMethod::Pca:
      return "pca";
    case ReduceMethod::Svd:
      return "svd";
    case ReduceMethod::Tsne:
      return "tsne";
  }
  return "pca";
}

ReduceMethod parse_reduce_method(const std::string & s)
{
  if (s == "pca") return ReduceMethod::Pca;
  if (s == "svd") return ReduceMethod::Svd;
  if (s == "tsne") return ReduceMethod::Tsne;
  throw ConfigError("unknown reduction method '" + s + "' (expected pca, svd or tsne)");
}

Eigen::MatrixXd stack_rows(const std::vector<Eigen::VectorXd> & rows)
{
  if (rows.empty()) return {};
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != x.cols()) throw ShapeError("stack_rows: rows differ in width");
    x.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  }
  return x;
}

PcaResult pca_fit_transform(const Eigen::MatrixXd & x, int k)
{
  check_k(x, k);
  PcaResult r;
  r.mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - r.mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(x.rows());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  // Eigenvalues come back ascending.
  const Eigen::VectorXd values = eig.eigenvalues().reverse().cwiseMax(0.0);
  const double total = values.sum();
  r.components = eig.eigenvectors().rowwise().reverse().leftCols(k);
  fix_signs(r.components);
  for (int i = 0; i < k; ++i) r.explained_variance.push_back(total > 0.0 ? values(i) / total : 0.0);
  r.embedding.method = ReduceMethod::Pca;
  r.embedding.points = centered * r.components;
  return r;
}

SvdResult svd_transform(const Eigen::MatrixXd & x, int k)
{
  check_k(x, k);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
  SvdResult r;
  r.components = svd.matrixV().leftCols(k);
  fix_signs(r.components);
  for (int i = 0; i < k; ++i) r.singular_values.push_back(svd.singularValues()(i));
  r.embedding.method = ReduceMethod::Svd;
  r.embedding.points = x * r.components;
  return r;
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd & x)
{
  const Eigen::VectorXd norms = x.rowwise().squaredNorm();
  Eigen::MatrixXd d = (-2.0 * x * x.transpose()).colwise() + norms;
  d.rowwise() += norms.transpose();
  d = d.cwiseMax(0.0);
  d.diagonal().setZero();
  return d;
}

Eigen::MatrixXd conditional_affinities(const Eigen::MatrixXd & sq_dist, double perplexity, double tolerance)
{
  const Eigen::Index n = sq_dist.rows();
  const double target = std::log(perplexity);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd row(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double d_min = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) d_min = std::min(d_min, sq_dist(i, j));
    }
    double beta = 1.0;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 200; ++iter) {
      // Distances shifted by the row minimum; entropy is unchanged by the shift.
      double sum = 0.0;
      double weighted = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double shifted = sq_dist(i, j) - d_min;
        row(j) = j == i ? 0.0 : std::exp(-shifted * beta);
        sum += row(j);
        weighted += shifted * row(j);
      }
      const double entropy = std::log(sum) + beta * weighted / sum;
      p.row(i) = row.transpose() / sum;
      const double diff = entropy - target;
      if (std::abs(diff) < tolerance) break;
      if (diff > 0.0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
  }
  return p;
}

TsneResult tsne_embed(const Eigen::MatrixXd & x, const TsneConfig & cfg)
{
  const Eigen::Index n = x.rows();
  if (!(cfg.perplexity > 0.0) || 3.0 * cfg.perplexity >= static_cast<double>(n)) {
    throw ValidationError(fmt::format("perplexity {} is too large for {} points", cfg.perplexity, n));
  }
  if (cfg.iterations < 0 || cfg.exaggeration_iters < 0) {
    throw ConfigError("t-SNE iteration counts must be non-negative");
  }
  const Eigen::MatrixXd cond = conditional_affinities(squared_distances(x), cfg.perplexity, cfg.entropy_tolerance);
  Eigen::MatrixXd p = (cond + cond.transpose()) / (2.0 * static_cast<double>(n));
  p = p.cwiseMax(1e-12);
  p.diagonal().setZero();

  Rng rng(cfg.seed);
  Eigen::MatrixXd y(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i, 0) = 1e-4 * rng.normal();
    y(i, 1) = 1e-4 * rng.normal();
  }
  Eigen::MatrixXd update = Eigen::MatrixXd::Zero(n, 2);
  Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(n, 2);
  TsneResult res;
  res.kl_trace.reserve(static_cast<std::size_t>(cfg.iterations));

  for (int it = 0; it < cfg.iterations; ++it) {
    const bool early = it < cfg.exaggeration_iters;
    Eigen::MatrixXd num = (1.0 + squared_distances(y).array()).inverse().matrix();
    num.diagonal().setZero();
    const double z = num.sum();
    const Eigen::MatrixXd q = (num / z).cwiseMax(1e-12);

    double kl = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i != j) kl += p(i, j) * std::log(p(i, j) / q(i, j));
      }
    }
    res.kl_trace.push_back(kl);

    const double exaggeration = early ? cfg.early_exaggeration : 1.0;
    const Eigen::MatrixXd w = ((exaggeration * p - q).array() * num.array()).matrix();
    const Eigen::MatrixXd grad = 4.0 * (w.rowwise().sum().asDiagonal() * y - w * y);

    const double momentum = early ? cfg.initial_momentum : cfg.final_momentum;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index c = 0; c < 2; ++c) {
        const bool same_sign = (grad(i, c) > 0.0) == (update(i, c) > 0.0);
        gains(i, c) = std::max(0.01, same_sign ? gains(i, c) * 0.8 : gains(i, c) + 0.2);
      }
    }
    update = momentum * update - cfg.learning_rate * gains.cwiseProduct(grad);
    y += update;
    y.rowwise() -= y.colwise().mean();
  }
  res.embedding.method = ReduceMethod::Tsne;
  res.embedding.points = std::move(y);
  return res;
}

}  // namespace scenforge::analysis
