#include "scenforge/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scenforge/rng.hpp"

namespace scenforge::nn
{
namespace
{
double evaluate(const LossClosure & loss)
{
  Tape tape;
  return loss(tape).scalar();
}
}  // namespace

double grad_check(const LossClosure & loss, const ParameterList & params, const GradCheckOptions & options)
{
  zero_grad(params);
  {
    Tape tape;
    const Var l = loss(tape);
    tape.backward(l);
  }
  Rng rng(options.seed);
  double worst = 0.0;
  for (const auto & p : params) {
    const Matrix analytic = p->grad;
    std::vector<Eigen::Index> coords(static_cast<std::size_t>(p->value.size()));
    std::iota(coords.begin(), coords.end(), Eigen::Index{0});
    if (options.max_coords_per_param > 0 && coords.size() > options.max_coords_per_param) {
      // Partial Fisher-Yates: the first k entries become a uniform sample.
      for (std::size_t i = 0; i < options.max_coords_per_param; ++i) {
        std::swap(coords[i], coords[i + rng.index(coords.size() - i)]);
      }
      coords.resize(options.max_coords_per_param);
    }
    for (const auto idx : coords) {
      const double saved = p->value(idx);
      p->value(idx) = saved + options.step;
      const double up = evaluate(loss);
      p->value(idx) = saved - options.step;
      const double down = evaluate(loss);
      p->value(idx) = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double a = analytic(idx);
      const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  zero_grad(params);
  return worst;
}

}  // namespace scenforge::nn
