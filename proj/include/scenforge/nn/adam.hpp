#pragma once

#include <cstdint>
#include <vector>

#include "scenforge/nn/tape.hpp"

namespace scenforge::nn
{

struct AdamConfig
{
  double lr{1e-3};
  double beta1{0.9};
  double beta2{0.999};
  double eps{1e-8};
};

struct AdamState
{
  AdamConfig config;
  std::uint64_t step{0};
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;

  AdamState() = default;
  AdamState(const ParameterList & params, AdamConfig cfg);
};

/// Bias-corrected Adam update of every parameter from its accumulated grad.
void adam_step(AdamState & state, const ParameterList & params);

/// Rescales all grads so their global L2 norm is at most max_norm (no-op for
/// max_norm <= 0). Returns the norm before clipping.
double clip_grad_norm(const ParameterList & params, double max_norm);

}  // namespace scenforge::nn
