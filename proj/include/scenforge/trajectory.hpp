#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scenforge
{

/// One sample in the ego frame. lat > 0 is left of ego.
struct Point
{
  double lat{0.0};  // relative lateral position [m]
  double lon{0.0};  // relative longitudinal position [m]

  friend bool operator==(const Point &, const Point &) = default;
};

enum class ScenarioLabel { CutIn, DriveByLeft, DriveByRight, Unknown };

std::string_view to_string(ScenarioLabel label);
ScenarioLabel parse_label(std::string_view text);

/// Inclusive frame-count range.
struct LengthRange
{
  int min{30};
  int max{70};

  bool contains(std::size_t n) const
  {
    return static_cast<int>(n) >= min && static_cast<int>(n) <= max;
  }
  int clamp(long n) const;
};

constexpr double kSampleRateHz = 10.0;

struct Trajectory
{
  std::string id;
  std::vector<Point> points;
  std::optional<ScenarioLabel> label;
  double sample_rate_hz{kSampleRateHz};

  std::size_t length() const { return points.size(); }
};

struct NormStats
{
  double mean_lat{0.0};
  double mean_lon{0.0};
  double std_lat{1.0};
  double std_lon{1.0};

  void validate() const;
  friend bool operator==(const NormStats &, const NormStats &) = default;
};

struct Dataset
{
  std::vector<Trajectory> trajectories;
  std::optional<NormStats> norm_stats;

  std::size_t size() const { return trajectories.size(); }
  bool empty() const { return trajectories.empty(); }
};

/// Trajectories sharing one length; members point into the source dataset.
struct LengthBatch
{
  std::size_t length{0};
  std::vector<const Trajectory *> members;
};

struct LoadOptions
{
  LengthRange length_range{};
  // Skip the length-range check (unit tests, short toy data).
  bool allow_any_length{false};
};

/// Throws ParseError (with 1-based line number) or ValidationError.
Dataset parse_dataset(std::istream & in, const LoadOptions & options = {});
Dataset load_dataset(const std::filesystem::path & path, const LoadOptions & options = {});

void write_dataset(std::ostream & out, const Dataset & ds);
void save_dataset(const Dataset & ds, const std::filesystem::path & path);

/// Checks finiteness, unique ids and (unless disabled) the length range.
void validate_dataset(const Dataset & ds, const LoadOptions & options = {});

/// Per-feature mean and population std over every point; std floored at 1e-8.
NormStats fit_normalization(const Dataset & ds);

Trajectory normalize(const Trajectory & t, const NormStats & stats);
Trajectory denormalize(const Trajectory & t, const NormStats & stats);
Dataset normalize(const Dataset & ds, const NormStats & stats);
Dataset denormalize(const Dataset & ds, const NormStats & stats);

/// Partition by length, ascending; members keep dataset order.
std::vector<LengthBatch> batch_by_length(const Dataset & ds);

}  // namespace scenforge
