#include "scenforge/nn/adam.hpp"

#include <cmath>

#include "scenforge/errors.hpp"

namespace scenforge::nn
{

AdamState::AdamState(const ParameterList & params, AdamConfig cfg) : config(cfg)
{
  first_moment.reserve(params.size());
  second_moment.reserve(params.size());
  for (const auto & p : params) {
    first_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    second_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void adam_step(AdamState & state, const ParameterList & params)
{
  if (params.size() != state.first_moment.size()) {
    throw ShapeError("adam: parameter count changed since the state was built");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto & p = *params[i];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols() ||
        state.first_moment[i].rows() != p.value.rows() || state.first_moment[i].cols() != p.value.cols()) {
      throw ShapeError("adam: shape mismatch for parameter '" + p.name + "'");
    }
  }
  ++state.step;
  const auto & c = state.config;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto & p = *params[i];
    auto & m = state.first_moment[i];
    auto & v = state.second_moment[i];
    m = c.beta1 * m + (1.0 - c.beta1) * p.grad;
    v = c.beta2 * v + (1.0 - c.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= c.lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + c.eps);
  }
}

double clip_grad_norm(const ParameterList & params, double max_norm)
{
  double total = 0.0;
  for (const auto & p : params) total += p->grad.squaredNorm();
  const double norm = std::sqrt(total);
  if (max_norm > 0.0 && norm > max_norm) {
    for (const auto & p : params) p->grad *= max_norm / norm;
  }
  return norm;
}

}  // namespace scenforge::nn
