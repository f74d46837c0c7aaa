#include "scenforge/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "scenforge/errors.hpp"

namespace scenforge
{
namespace
{
double logistic(double x)
{
  return 1.0 / (1.0 + std::exp(-x));
}

std::size_t draw_length(const SynthParams & params, Rng & rng)
{
  const auto span = static_cast<std::size_t>(params.length_range.max - params.length_range.min + 1);
  return static_cast<std::size_t>(params.length_range.min) + rng.index(span);
}

// Shift `lon` so that it stays inside [lo, hi] where possible; lo wins on conflict.
void fit_into_range(std::vector<Point> & pts, const Interval & range)
{
  double lo = pts.front().lon;
  double hi = lo;
  for (const auto & p : pts) {
    lo = std::min(lo, p.lon);
    hi = std::max(hi, p.lon);
  }
  double shift = 0.0;
  if (hi > range.max) shift = range.max - hi;
  if (lo + shift < range.min) shift = range.min - lo;
  for (auto & p : pts) {
    p.lon += shift;
  }
}

Trajectory synth_cutin(const SynthParams & params, Rng & rng)
{
  const std::size_t n = draw_length(params, rng);
  const long transition_end = std::max<long>(1, static_cast<long>(n) - 1 - kCutInDwellFrames);
  const double midpoint = rng.uniform(0.4, 0.6);
  const double steepness = rng.uniform(2.0, 5.0);
  const double s0 = logistic(-steepness * midpoint);
  const double s1 = logistic(steepness * (1.0 - midpoint));

  const bool decelerating = rng.uniform() < params.decel_fraction;
  const double sign = decelerating ? -1.0 : 1.0;
  const double v0 = sign * rng.uniform(0.5, 4.0);
  double accel = rng.uniform(params.accel_range_mps2.min, params.accel_range_mps2.max);
  if (decelerating) accel = -std::abs(accel);
  const double span = params.lon_range_m.max - params.lon_range_m.min;
  // Skewed toward the near range: most cut-ins happen 20-60 m ahead.
  const double lon0 = params.lon_range_m.min + span * std::pow(rng.uniform(), 1.8);

  Trajectory t;
  t.label = ScenarioLabel::CutIn;
  t.points.resize(n);
  const double dt = 1.0 / kSampleRateHz;
  for (std::size_t i = 0; i < n; ++i) {
    double lat = 0.0;
    if (static_cast<long>(i) < transition_end) {
      const double u = static_cast<double>(i) / static_cast<double>(transition_end);
      const double s = logistic(steepness * (u - midpoint));
      lat = params.lane_offset_m * (1.0 - (s - s0) / (s1 - s0));
    }
    const double time = static_cast<double>(i) * dt;
    t.points[i] = {lat, lon0 + v0 * time + 0.5 * accel * time * time};
  }
  fit_into_range(t.points, params.lon_range_m);
  return t;
}

Trajectory synth_driveby(const SynthParams & params, Rng & rng, double side)
{
  const std::size_t n = draw_length(params, rng);
  const double amplitude = rng.uniform(0.0, 0.3);
  const double period = rng.uniform(30.0, 90.0);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double span = params.lon_range_m.max - params.lon_range_m.min;
  const double lon0 = params.lon_range_m.min + 0.3 * span * rng.uniform();
  const double v = rng.uniform(5.0, 15.0);
  const double accel = 0.5 * rng.uniform(params.accel_range_mps2.min, params.accel_range_mps2.max);

  Trajectory t;
  t.label = side > 0 ? ScenarioLabel::DriveByLeft : ScenarioLabel::DriveByRight;
  t.points.resize(n);
  const double dt = 1.0 / kSampleRateHz;
  for (std::size_t i = 0; i < n; ++i) {
    const double wobble = amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / period + phase);
    const double time = static_cast<double>(i) * dt;
    t.points[i] = {side * (params.lane_offset_m + wobble), lon0 + v * time + 0.5 * accel * time * time};
  }
  return t;
}
}  // namespace

void SynthParams::validate() const
{
  if (!(lon_range_m.min < lon_range_m.max) || !(accel_range_mps2.min < accel_range_mps2.max) ||
      !(length_range.min < length_range.max)) {
    throw ValidationError("synth ranges need min < max");
  }
  if (length_range.min < 2) {
    throw ValidationError("synth length range must start at 2 frames or more");
  }
  if (!(noise_std_m >= 0.0)) {
    throw ValidationError("noise_std_m must be >= 0");
  }
  if (!(decel_fraction >= 0.0 && decel_fraction <= 1.0)) {
    throw ValidationError("decel_fraction must lie in [0, 1]");
  }
}

Trajectory synth_scenario(ScenarioLabel kind, const SynthParams & params, Rng & rng, std::string id)
{
  params.validate();
  Trajectory t;
  switch (kind) {
    case ScenarioLabel::CutIn:
      t = synth_cutin(params, rng);
      break;
    case ScenarioLabel::DriveByLeft:
      t = synth_driveby(params, rng, 1.0);
      break;
    case ScenarioLabel::DriveByRight:
      t = synth_driveby(params, rng, -1.0);
      break;
    case ScenarioLabel::Unknown:
      throw ValidationError("cannot synthesize an 'unknown' scenario");
  }
  if (params.noise_std_m > 0.0) {
    for (auto & p : t.points) {
      p.lat += params.noise_std_m * rng.normal();
      p.lon += params.noise_std_m * rng.normal();
    }
  }
  t.id = std::move(id);
  return t;
}

Dataset synth_dataset(const ClassCounts & counts, const SynthParams & params, std::uint64_t seed)
{
  Dataset ds;
  ds.trajectories.reserve(counts.cutin + counts.driveby_left + counts.driveby_right);
  const Rng root(seed);
  auto emit = [&](ScenarioLabel kind, std::size_t count) {
    Rng stream = root.split(to_string(kind));
    for (std::size_t i = 0; i < count; ++i) {
      ds.trajectories.push_back(
        synth_scenario(kind, params, stream, std::string(to_string(kind)) + "-" + std::to_string(i)));
    }
  };
  emit(ScenarioLabel::CutIn, counts.cutin);
  emit(ScenarioLabel::DriveByLeft, counts.driveby_left);
  emit(ScenarioLabel::DriveByRight, counts.driveby_right);
  return ds;
}

ScenarioLabel rule_label(const Trajectory & t, double lane_width_m, double dwell_s)
{
  if (t.points.empty()) {
    return ScenarioLabel::Unknown;
  }
  const double half = 0.5 * lane_width_m;
  const auto & pts = t.points;
  if (std::all_of(pts.begin(), pts.end(), [half](const Point & p) { return p.lat > half; })) {
    return ScenarioLabel::DriveByLeft;
  }
  if (std::all_of(pts.begin(), pts.end(), [half](const Point & p) { return p.lat < -half; })) {
    return ScenarioLabel::DriveByRight;
  }
  const auto dwell = static_cast<std::size_t>(std::lround(dwell_s * t.sample_rate_hz));
  if (pts.front().lat >= half && pts.size() >= dwell) {
    const bool settled = std::all_of(
      pts.end() - static_cast<std::ptrdiff_t>(dwell), pts.end(),
      [half](const Point & p) { return std::abs(p.lat) <= half; });
    if (settled && std::abs(pts.back().lat) <= half) {
      return ScenarioLabel::CutIn;
    }
  }
  return ScenarioLabel::Unknown;
}

}  // namespace scenforge
