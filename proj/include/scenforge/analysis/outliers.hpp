#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "scenforge/ae/autoencoder.hpp"

namespace scenforge::analysis
{

struct OutlierScore
{
  std::string id;
  double loss{0.0};
  double prob{0.0};
};

/// prob = exp(loss - max_loss), sorted by prob descending (stable on ties).
/// Throws ValidationError for empty input or negative / non-finite losses.
std::vector<OutlierScore> outlier_probabilities(const std::vector<std::pair<std::string, double>> & losses);

/// Scores every trajectory of a normalized dataset and keeps the k most likely
/// outliers (all of them when k exceeds the dataset size).
std::vector<std::pair<Trajectory, OutlierScore>> top_outliers(const Dataset & ds, const ae::AeModel & ae, std::size_t k);

/// id,loss,prob rows.
void write_outliers_csv(std::ostream & out, const std::vector<OutlierScore> & scores);

}  // namespace scenforge::analysis
