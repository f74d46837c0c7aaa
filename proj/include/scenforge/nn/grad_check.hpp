#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

#include "scenforge/nn/tape.hpp"

namespace scenforge::nn
{

struct GradCheckOptions
{
  double step{1e-5};
  // 0 checks every coordinate; otherwise a seeded subsample per parameter.
  std::size_t max_coords_per_param{0};
  std::uint64_t seed{0};
  // Denominator floor so near-zero gradients are compared absolutely.
  double floor{1e-6};
};

/// Builds the scalar loss on a fresh tape.
using LossClosure = std::function<Var(Tape &)>;

/// Max over checked coordinates of |analytic - numeric| / max(|analytic|, |numeric|, floor),
/// numeric being the central difference. Parameter values are restored.
double grad_check(const LossClosure & loss, const ParameterList & params, const GradCheckOptions & options = {});

}  // namespace scenforge::nn
