#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "scenforge/metrics/dtw.hpp"
#include "scenforge/metrics/hungarian.hpp"
#include "scenforge/rng.hpp"

namespace scenforge::metrics
{

/// Mean over generated rows of the distance to the closest real column.
double matching_score(const DistanceMatrix & dm);

/// Share of real columns that are the nearest neighbour of at least one
/// generated row. Ties go to the lowest column index.
double coverage_score(const DistanceMatrix & dm);

/// Hungarian matching on dm; non-square input throws unless `subsample` is set,
/// in which case the larger side is uniformly subsampled to the smaller size.
Assignment hungarian(const DistanceMatrix & dm, bool subsample = false, Rng * rng = nullptr);

struct EvalConfig
{
  int runs{5};
  int m_over_n{4};
  // Real-set size per run (N); 0 uses the whole real set.
  std::size_t n{50};
  double truncate_fraction{0.75};
  std::uint64_t seed{0};
  unsigned threads{0};
};

struct EvalReport
{
  double matching{0.0};
  double coverage{0.0};
  double hungarian_total{0.0};
  double hungarian_mean{0.0};
  double hungarian_truncated{0.0};
  std::vector<double> matched;  // ascending
  std::size_t m{0};
  std::size_t n{0};
  std::uint64_t seed{0};
};

struct MetricStats
{
  double min{0.0};
  double max{0.0};
  double avg{0.0};
};

struct EvalSummary
{
  std::vector<EvalReport> runs;
  MetricStats matching;
  MetricStats coverage;
  MetricStats hungarian_total;
  MetricStats hungarian_mean;
  MetricStats hungarian_truncated;
};

/// Per run: draw N real and M = m_over_n * N generated samples, score
/// matching/coverage on the M x N matrix, then Hungarian on N of the M rows
/// against the same N columns. Throws ValidationError when a set is too small.
EvalSummary evaluate_sets(const Dataset & gs, const Dataset & rs, const EvalConfig & cfg);

/// Baseline: per run, a random disjoint split of the real set into a
/// "generated" part of M and a reference part of N samples.
EvalSummary baseline_split_eval(const Dataset & rs, const EvalConfig & cfg);

MetricStats summarize(const std::vector<double> & values);

/// One row per run: run,seed,m,n,matching,coverage,hungarian_total,hungarian_mean,hungarian_truncated
void write_runs_csv(std::ostream & out, const std::string & set_name, const EvalSummary & s, bool header = true);
/// metric,min,max,avg rows.
void write_summary_csv(std::ostream & out, const std::string & set_name, const EvalSummary & s, bool header = true);
/// Text table with Matching / Coverage / Hungarian / Hungarian(75%) min-max-avg columns.
void write_table(std::ostream & out, const std::vector<std::pair<std::string, EvalSummary>> & rows, double fraction);
/// rank,run,distance rows for the sorted matched-distance curves.
void write_matched_csv(std::ostream & out, const std::string & set_name, const EvalSummary & s, bool header = true);

}  // namespace scenforge::metrics
