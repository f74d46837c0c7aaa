#include "scenforge/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "scenforge/errors.hpp"

namespace scenforge
{
namespace
{
constexpr double kStdFloor = 1e-8;

Trajectory parse_record(const nlohmann::json & j)
{
  Trajectory t;
  t.id = j.at("id").get<std::string>();
  if (j.contains("label") && !j.at("label").is_null()) {
    t.label = parse_label(j.at("label").get<std::string>());
  }
  const auto & pts = j.at("points");
  if (!pts.is_array()) {
    throw ParseError("'points' is not an array");
  }
  t.points.reserve(pts.size());
  for (const auto & p : pts) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw ParseError("point is not a [lat, lon] number pair");
    }
    t.points.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return t;
}

template <typename Fn>
Trajectory map_points(const Trajectory & t, Fn && fn)
{
  Trajectory out = t;
  for (auto & p : out.points) {
    p = fn(p);
  }
  return out;
}
}  // namespace

std::string_view to_string(ScenarioLabel label)
{
  switch (label) {
    case ScenarioLabel::CutIn:
      return "cutin";
    case ScenarioLabel::DriveByLeft:
      return "driveby_left";
    case ScenarioLabel::DriveByRight:
      return "driveby_right";
    case ScenarioLabel::Unknown:
      return "unknown";
  }
  return "unknown";
}

ScenarioLabel parse_label(std::string_view text)
{
  if (text == "cutin") return ScenarioLabel::CutIn;
  if (text == "driveby_left") return ScenarioLabel::DriveByLeft;
  if (text == "driveby_right") return ScenarioLabel::DriveByRight;
  if (text == "unknown") return ScenarioLabel::Unknown;
  throw ParseError("unknown scenario label '" + std::string(text) + "'");
}

int LengthRange::clamp(long n) const
{
  return static_cast<int>(std::clamp<long>(n, min, max));
}

void NormStats::validate() const
{
  if (!(std_lat > 0.0) || !(std_lon > 0.0) || !std::isfinite(std_lat) || !std::isfinite(std_lon) ||
      !std::isfinite(mean_lat) || !std::isfinite(mean_lon)) {
    throw ValidationError("normalization stats need finite means and positive stds");
  }
}

void validate_dataset(const Dataset & ds, const LoadOptions & options)
{
  std::set<std::string> ids;
  for (const auto & t : ds.trajectories) {
    if (!ids.insert(t.id).second) {
      throw ValidationError("duplicate trajectory id '" + t.id + "'");
    }
    if (!options.allow_any_length && !options.length_range.contains(t.length())) {
      throw ValidationError(
        "trajectory '" + t.id + "' has " + std::to_string(t.length()) + " points, outside [" +
        std::to_string(options.length_range.min) + ", " + std::to_string(options.length_range.max) + "]");
    }
    for (const auto & p : t.points) {
      if (!std::isfinite(p.lat) || !std::isfinite(p.lon)) {
        throw ValidationError("trajectory '" + t.id + "' has a non-finite coordinate");
      }
    }
  }
}

Dataset parse_dataset(std::istream & in, const LoadOptions & options)
{
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    try {
      ds.trajectories.push_back(parse_record(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception & e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError & e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  validate_dataset(ds, options);
  return ds;
}

Dataset load_dataset(const std::filesystem::path & path, const LoadOptions & options)
{
  std::ifstream in(path);
  if (!in) {
    throw MissingArtifactError("cannot open dataset '" + path.string() + "'");
  }
  return parse_dataset(in, options);
}

void write_dataset(std::ostream & out, const Dataset & ds)
{
  for (const auto & t : ds.trajectories) {
    nlohmann::json j;
    j["id"] = t.id;
    j["label"] = std::string(to_string(t.label.value_or(ScenarioLabel::Unknown)));
    auto pts = nlohmann::json::array();
    for (const auto & p : t.points) {
      pts.push_back({p.lat, p.lon});
    }
    j["points"] = std::move(pts);
    out << j.dump() << '\n';
  }
}

void save_dataset(const Dataset & ds, const std::filesystem::path & path)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error("cannot write dataset '" + path.string() + "'");
  }
  write_dataset(out, ds);
  out.flush();
  if (!out) {
    throw Error("I/O failure while writing '" + path.string() + "'");
  }
}

NormStats fit_normalization(const Dataset & ds)
{
  double n = 0.0;
  double sum_lat = 0.0;
  double sum_lon = 0.0;
  for (const auto & t : ds.trajectories) {
    for (const auto & p : t.points) {
      sum_lat += p.lat;
      sum_lon += p.lon;
      n += 1.0;
    }
  }
  if (n == 0.0) {
    throw ValidationError("cannot fit normalization on an empty dataset");
  }
  NormStats s;
  s.mean_lat = sum_lat / n;
  s.mean_lon = sum_lon / n;
  double var_lat = 0.0;
  double var_lon = 0.0;
  for (const auto & t : ds.trajectories) {
    for (const auto & p : t.points) {
      var_lat += (p.lat - s.mean_lat) * (p.lat - s.mean_lat);
      var_lon += (p.lon - s.mean_lon) * (p.lon - s.mean_lon);
    }
  }
  s.std_lat = std::max(std::sqrt(var_lat / n), kStdFloor);
  s.std_lon = std::max(std::sqrt(var_lon / n), kStdFloor);
  return s;
}

Trajectory normalize(const Trajectory & t, const NormStats & s)
{
  return map_points(t, [&s](const Point & p) {
    return Point{(p.lat - s.mean_lat) / s.std_lat, (p.lon - s.mean_lon) / s.std_lon};
  });
}

Trajectory denormalize(const Trajectory & t, const NormStats & s)
{
  return map_points(t, [&s](const Point & p) {
    return Point{p.lat * s.std_lat + s.mean_lat, p.lon * s.std_lon + s.mean_lon};
  });
}

Dataset normalize(const Dataset & ds, const NormStats & stats)
{
  stats.validate();
  Dataset out;
  out.norm_stats = stats;
  out.trajectories.reserve(ds.size());
  for (const auto & t : ds.trajectories) {
    out.trajectories.push_back(normalize(t, stats));
  }
  return out;
}

Dataset denormalize(const Dataset & ds, const NormStats & stats)
{
  stats.validate();
  Dataset out;
  out.trajectories.reserve(ds.size());
  for (const auto & t : ds.trajectories) {
    out.trajectories.push_back(denormalize(t, stats));
  }
  return out;
}

std::vector<LengthBatch> batch_by_length(const Dataset & ds)
{
  std::map<std::size_t, std::vector<const Trajectory *>> buckets;
  for (const auto & t : ds.trajectories) {
    buckets[t.length()].push_back(&t);
  }
  std::vector<LengthBatch> out;
  out.reserve(buckets.size());
  for (auto & [len, members] : buckets) {
    out.push_back({len, std::move(members)});
  }
  return out;
}

}  // namespace scenforge
