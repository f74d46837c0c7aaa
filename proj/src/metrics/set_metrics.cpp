#include "scenforge/metrics/set_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "scenforge/errors.hpp"

namespace scenforge::metrics
{
namespace
{

Eigen::Index argmin_row(const Eigen::MatrixXd & d, Eigen::Index i)
{
  // Strict comparison keeps the lowest index on ties.
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < d.cols(); ++j) {
    if (d(i, j) < d(i, best)) best = j;
  }
  return best;
}

Dataset pick(const Dataset & ds, const std::vector<std::size_t> & idx)
{
  Dataset out;
  out.trajectories.reserve(idx.size());
  for (auto i : idx) out.trajectories.push_back(ds.trajectories[i]);
  return out;
}

DistanceMatrix select_rows(const DistanceMatrix & dm, const std::vector<std::size_t> & rows)
{
  DistanceMatrix out;
  out.col_ids = dm.col_ids;
  out.d.resize(static_cast<Eigen::Index>(rows.size()), dm.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row_ids.push_back(dm.row_ids[rows[r]]);
    out.d.row(static_cast<Eigen::Index>(r)) = dm.d.row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

EvalReport score(const DistanceMatrix & dm, std::size_t n, Rng & rng, const EvalConfig & cfg)
{
  EvalReport rep;
  rep.m = static_cast<std::size_t>(dm.rows());
  rep.n = static_cast<std::size_t>(dm.cols());
  rep.matching = matching_score(dm);
  rep.coverage = coverage_score(dm);
  const auto rows = sample_indices(rep.m, n, rng);
  const DistanceMatrix square = select_rows(dm, rows);
  const Assignment a = hungarian(square.d);
  for (const auto & [i, j] : a.pairs) {
    rep.matched.push_back(square.d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  }
  std::sort(rep.matched.begin(), rep.matched.end());
  rep.hungarian_total = a.total;
  rep.hungarian_mean = a.total / static_cast<double>(a.pairs.size());
  rep.hungarian_truncated = hungarian_truncated(rep.matched, cfg.truncate_fraction);
  return rep;
}

void check_config(const EvalConfig & cfg)
{
  if (cfg.runs < 1) throw ValidationError("eval runs must be >= 1");
  if (cfg.m_over_n < 1) throw ValidationError("m_over_n must be >= 1");
  if (!(cfg.truncate_fraction > 0.0 && cfg.truncate_fraction <= 1.0)) {
    throw ValidationError("truncate_fraction must lie in (0, 1]");
  }
}

EvalSummary finish(std::vector<EvalReport> runs)
{
  EvalSummary s;
  auto collect = [&](auto field) {
    std::vector<double> v;
    for (const auto & r : runs) v.push_back(r.*field);
    return summarize(v);
  };
  s.matching = collect(&EvalReport::matching);
  s.coverage = collect(&EvalReport::coverage);
  s.hungarian_total = collect(&EvalReport::hungarian_total);
  s.hungarian_mean = collect(&EvalReport::hungarian_mean);
  s.hungarian_truncated = collect(&EvalReport::hungarian_truncated);
  s.runs = std::move(runs);
  return s;
}

}  // namespace

double matching_score(const DistanceMatrix & dm)
{
  if (dm.rows() == 0 || dm.cols() == 0) throw ValidationError("matching_score on an empty matrix");
  return dm.d.rowwise().minCoeff().sum() / static_cast<double>(dm.rows());
}

double coverage_score(const DistanceMatrix & dm)
{
  if (dm.rows() == 0 || dm.cols() == 0) throw ValidationError("coverage_score on an empty matrix");
  std::set<Eigen::Index> hit;
  for (Eigen::Index i = 0; i < dm.rows(); ++i) hit.insert(argmin_row(dm.d, i));
  return static_cast<double>(hit.size()) / static_cast<double>(dm.cols());
}

Assignment hungarian(const DistanceMatrix & dm, bool subsample, Rng * rng)
{
  if (dm.rows() == dm.cols()) return hungarian(dm.d);
  if (!subsample) {
    throw ValidationError(fmt::format("hungarian needs a square matrix, got {}x{}", dm.rows(), dm.cols()));
  }
  Rng local(0);
  Rng & r = rng ? *rng : local;
  const auto k = static_cast<std::size_t>(std::min(dm.rows(), dm.cols()));
  if (dm.rows() > dm.cols()) {
    const auto rows = sample_indices(static_cast<std::size_t>(dm.rows()), k, r);
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(k), dm.cols());
    for (std::size_t i = 0; i < k; ++i) sub.row(static_cast<Eigen::Index>(i)) = dm.d.row(static_cast<Eigen::Index>(rows[i]));
    Assignment a = hungarian(sub);
    for (auto & p : a.pairs) p.first = rows[p.first];
    return a;
  }
  const auto cols = sample_indices(static_cast<std::size_t>(dm.cols()), k, r);
  Eigen::MatrixXd sub(dm.rows(), static_cast<Eigen::Index>(k));
  for (std::size_t j = 0; j < k; ++j) sub.col(static_cast<Eigen::Index>(j)) = dm.d.col(static_cast<Eigen::Index>(cols[j]));
  Assignment a = hungarian(sub);
  for (auto & p : a.pairs) p.second = cols[p.second];
  return a;
}

MetricStats summarize(const std::vector<double> & values)
{
  if (values.empty()) throw ValidationError("summarize needs at least one value");
  MetricStats s;
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  s.avg = total / static_cast<double>(values.size());
  return s;
}

EvalSummary evaluate_sets(const Dataset & gs, const Dataset & rs, const EvalConfig & cfg)
{
  check_config(cfg);
  const std::size_t n = cfg.n == 0 ? rs.size() : cfg.n;
  const std::size_t m = static_cast<std::size_t>(cfg.m_over_n) * n;
  if (n == 0 || rs.size() < n) {
    throw ValidationError(fmt::format("real set has {} samples, protocol needs {}", rs.size(), n));
  }
  if (gs.size() < m) {
    throw ValidationError(fmt::format("generated set has {} samples, protocol needs {}", gs.size(), m));
  }
  const Rng root(cfg.seed);
  std::vector<EvalReport> runs;
  for (int r = 0; r < cfg.runs; ++r) {
    Rng rng = root.split("eval").split(static_cast<std::uint64_t>(r));
    const Dataset real = pick(rs, sample_indices(rs.size(), n, rng));
    const Dataset gen = pick(gs, sample_indices(gs.size(), m, rng));
    const DistanceMatrix dm = pairwise_matrix(gen, real, cfg.threads);
    EvalReport rep = score(dm, n, rng, cfg);
    rep.seed = rng.stream();
    runs.push_back(std::move(rep));
  }
  return finish(std::move(runs));
}

EvalSummary baseline_split_eval(const Dataset & rs, const EvalConfig & cfg)
{
  check_config(cfg);
  const std::size_t n = cfg.n == 0 ? rs.size() / static_cast<std::size_t>(cfg.m_over_n + 1) : cfg.n;
  const std::size_t m = static_cast<std::size_t>(cfg.m_over_n) * n;
  if (n == 0 || rs.size() < m + n) {
    throw ValidationError(fmt::format("real set has {} samples, baseline split needs {}", rs.size(), m + n));
  }
  const Rng root(cfg.seed);
  std::vector<EvalReport> runs;
  for (int r = 0; r < cfg.runs; ++r) {
    Rng rng = root.split("baseline").split(static_cast<std::uint64_t>(r));
    const auto idx = sample_indices(rs.size(), m + n, rng);
    const Dataset gen = pick(rs, {idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m)});
    const Dataset real = pick(rs, {idx.begin() + static_cast<std::ptrdiff_t>(m), idx.end()});
    const DistanceMatrix dm = pairwise_matrix(gen, real, cfg.threads);
    EvalReport rep = score(dm, n, rng, cfg);
    rep.seed = rng.stream();
    runs.push_back(std::move(rep));
  }
  return finish(std::move(runs));
}

void write_runs_csv(std::ostream & out, const std::string & set_name, const EvalSummary & s, bool header)
{
  if (header) {
    out << "set,run,seed,m,n,matching,coverage,hungarian_total,hungarian_mean,hungarian_truncated\n";
  }
  for (std::size_t r = 0; r < s.runs.size(); ++r) {
    const auto & e = s.runs[r];
    out << fmt::format(
      "{},{},{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", set_name, r, e.seed, e.m, e.n, e.matching, e.coverage,
      e.hungarian_total, e.hungarian_mean, e.hungarian_truncated);
  }
}

void write_summary_csv(std::ostream & out, const std::string & set_name, const EvalSummary & s, bool header)
{
  if (header) out << "set,metric,min,max,avg\n";
  auto row = [&](const char * name, const MetricStats & m) {
    out << fmt::format("{},{},{:.17g},{:.17g},{:.17g}\n", set_name, name, m.min, m.max, m.avg);
  };
  row("matching", s.matching);
  row("coverage", s.coverage);
  row("hungarian_total", s.hungarian_total);
  row("hungarian_mean", s.hungarian_mean);
  row("hungarian_truncated", s.hungarian_truncated);
}

void write_table(std::ostream & out, const std::vector<std::pair<std::string, EvalSummary>> & rows, double fraction)
{
  const std::string trunc = fmt::format("Hungarian ({:.0f}%)", fraction * 100.0);
  out << fmt::format(
    "{:<22} | {:^26} | {:^26} | {:^26} | {:^26}\n", "Set", "Matching", "Coverage", "Hungarian (mean)", trunc);
  out << fmt::format(
    "{:<22} | {:>8} {:>8} {:>8} | {:>8} {:>8} {:>8} | {:>8} {:>8} {:>8} | {:>8} {:>8} {:>8}\n", "", "min", "max",
    "avg", "min", "max", "avg", "min", "max", "avg", "min", "max", "avg");
  out << std::string(22 + 4 * 29, '-') << "\n";
  auto cell = [](const MetricStats & m) { return fmt::format("{:8.3f} {:8.3f} {:8.3f}", m.min, m.max, m.avg); };
  for (const auto & [name, s] : rows) {
    out << fmt::format(
      "{:<22} | {} | {} | {} | {}\n", name, cell(s.matching), cell(s.coverage), cell(s.hungarian_mean),
      cell(s.hungarian_truncated));
  }
}

void write_matched_csv(std::ostream & out, const std::string & set_name, const EvalSummary & s, bool header)
{
  if (header) out << "set,run,rank,distance\n";
  for (std::size_t r = 0; r < s.runs.size(); ++r) {
    const auto & m = s.runs[r].matched;
    for (std::size_t k = 0; k < m.size(); ++k) {
      out << fmt::format("{},{},{},{:.17g}\n", set_name, r, k, m[k]);
    }
  }
}

}  // namespace scenforge::metrics
