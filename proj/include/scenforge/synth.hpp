#pragma once

#include <cstddef>
#include <string>

#include "scenforge/rng.hpp"
#include "scenforge/trajectory.hpp"

namespace scenforge
{

struct Interval
{
  double min{0.0};
  double max{0.0};
};

struct SynthParams
{
  double lane_offset_m{3.5};
  Interval lon_range_m{10.0, 120.0};
  Interval accel_range_mps2{-1.5, 1.5};
  double noise_std_m{0.15};
  LengthRange length_range{30, 70};
  double decel_fraction{0.15};

  void validate() const;
};

/// Frames a cut-in must spend inside the ego lane at the end of the window.
constexpr int kCutInDwellFrames = 20;

/// Draws one synthetic scenario. Pure function of (kind, params, rng state).
///
/// Cut-ins model the window a rule-based extractor produces: it opens when the
/// vehicle starts drifting out of the left lane and closes once the vehicle has
/// stayed in the ego lane for the dwell time, so the lateral transition spans
/// frames [0, L - dwell - 1] and then holds at 0.
Trajectory synth_scenario(ScenarioLabel kind, const SynthParams & params, Rng & rng, std::string id = {});

struct ClassCounts
{
  std::size_t cutin{0};
  std::size_t driveby_left{0};
  std::size_t driveby_right{0};
};

/// Classes are emitted in blocks (cut-ins, left, right); ids are "<kind>-<index>".
Dataset synth_dataset(const ClassCounts & counts, const SynthParams & params, std::uint64_t seed);

/// Labels a trajectory from explicit geometric rules on the lateral track.
ScenarioLabel rule_label(const Trajectory & t, double lane_width_m = 3.5, double dwell_s = 2.0);

}  // namespace scenforge
