#include "scenforge/ae/length_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scenforge/errors.hpp"
#include "scenforge/nn/adam.hpp"

namespace scenforge::ae
{
namespace
{
using nn::Matrix;
constexpr double kPi = 3.14159265358979323846;

double span_of(const LengthRange & r)
{
  return std::max(1.0, static_cast<double>(r.max - r.min));
}

Matrix standardized_rows(const LenModel & lm, const std::vector<const LatentVector *> & zs)
{
  Matrix x(static_cast<Eigen::Index>(zs.size()), lm.input_mean.size());
  for (std::size_t i = 0; i < zs.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) =
      (zs[i]->transpose().array() - lm.input_mean.array()) / lm.input_std.array();
  }
  return x;
}
}  // namespace

LatentDataset encode_dataset(const AeModel & m, const Dataset & ds)
{
  LatentDataset ld;
  ld.ids.reserve(ds.size());
  ld.latents.resize(ds.size());
  ld.lengths.reserve(ds.size());
  for (const auto & t : ds.trajectories) {
    ld.ids.push_back(t.id);
    ld.lengths.push_back(t.length());
  }
  for (const auto & lb : batch_by_length(ds)) {
    for (std::size_t start = 0; start < lb.members.size(); start += 256) {
      const auto end = std::min(lb.members.size(), start + 256);
      const std::vector<const Trajectory *> chunk(
        lb.members.begin() + static_cast<std::ptrdiff_t>(start), lb.members.begin() + static_cast<std::ptrdiff_t>(end));
      nn::Tape tape;
      const auto z = encode_batch(tape, m, chunk);
      for (std::size_t b = 0; b < chunk.size(); ++b) {
        const auto idx = static_cast<std::size_t>(chunk[b] - ds.trajectories.data());
        ld.latents[idx] = z.value().row(static_cast<Eigen::Index>(b)).transpose();
      }
    }
  }
  return ld;
}

double LenModel::raw_length(const LatentVector & z) const
{
  if (z.size() != input_mean.size()) {
    throw ShapeError("length estimator expects latents of width " + std::to_string(input_mean.size()));
  }
  nn::Tape tape;
  const auto y = net.forward(tape, tape.constant(standardized_rows(*this, {&z})));
  return static_cast<double>(length_range.min) + y.scalar() * span_of(length_range);
}

std::size_t round_length(double raw, const LengthRange & range)
{
  return static_cast<std::size_t>(range.clamp(std::lround(raw)));
}

std::size_t estimate_length(const LenModel & lm, const LatentVector & z)
{
  return round_length(lm.raw_length(z), lm.length_range);
}

LenTrainResult train_length_estimator(
  const LatentDataset & ld, const LengthRange & range, const LenConfig & cfg, const std::string & ae_fingerprint)
{
  if (ld.size() < 10) {
    throw ValidationError("length estimator needs at least 10 latents, got " + std::to_string(ld.size()));
  }
  if (ld.lengths.size() != ld.size()) {
    throw ValidationError("latent and length sets differ in size");
  }
  const Rng root(cfg.seed);
  std::vector<std::size_t> order(ld.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng = root.split("split");
  std::shuffle(order.begin(), order.end(), split_rng);
  const auto n_hold = std::min(
    ld.size() - 1, static_cast<std::size_t>(std::lround(cfg.holdout_fraction * static_cast<double>(ld.size()))));
  std::vector<std::size_t> holdout(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_hold));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_hold), order.end());

  const auto dim = ld.latents.front().size();
  LenTrainResult result;
  LenModel & lm = result.model;
  lm.length_range = range;
  lm.ae_fingerprint = ae_fingerprint;
  lm.input_mean = Eigen::RowVectorXd::Zero(dim);
  lm.input_std = Eigen::RowVectorXd::Zero(dim);
  for (const auto i : train) lm.input_mean += ld.latents[i].transpose();
  lm.input_mean /= static_cast<double>(train.size());
  for (const auto i : train) lm.input_std += (ld.latents[i].transpose() - lm.input_mean).cwiseAbs2();
  lm.input_std = (lm.input_std / static_cast<double>(train.size())).cwiseSqrt().cwiseMax(1e-8);

  std::vector<int> widths{static_cast<int>(dim)};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(1);
  Rng init_rng = root.split("init");
  lm.net = nn::MlpParams::create("len", widths, nn::Activation::Tanh, nn::Activation::Linear, init_rng);
  const auto params = lm.net.parameters();
  nn::AdamState adam(params, {cfg.lr});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng epoch_rng = root.split("epoch").split(static_cast<std::uint64_t>(epoch));
    std::shuffle(train.begin(), train.end(), epoch_rng);
    adam.config.lr = cfg.lr * 0.5 * (1.0 + std::cos(kPi * epoch / cfg.epochs));
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < train.size(); start += cfg.batch_size) {
      const auto end = std::min(train.size(), start + cfg.batch_size);
      std::vector<const LatentVector *> zs;
      Matrix target(static_cast<Eigen::Index>(end - start), 1);
      for (std::size_t k = start; k < end; ++k) {
        zs.push_back(&ld.latents[train[k]]);
        target(static_cast<Eigen::Index>(k - start), 0) =
          (static_cast<double>(ld.lengths[train[k]]) - range.min) / span_of(range);
      }
      nn::zero_grad(params);
      nn::Tape tape;
      const auto loss = nn::mse(lm.net.forward(tape, tape.constant(standardized_rows(lm, zs))), target);
      tape.backward(loss);
      nn::adam_step(adam, params);
      total += loss.scalar();
      ++batches;
    }
    result.train_loss.push_back(total / static_cast<double>(batches));
    if (!std::isfinite(result.train_loss.back())) {
      throw NumericError("length estimator loss is not finite at epoch " + std::to_string(epoch + 1));
    }
  }

  std::sort(holdout.begin(), holdout.end());
  result.holdout_rows = holdout;
  std::size_t exact = 0;
  std::size_t within2 = 0;
  for (const auto i : holdout) {
    const auto est = static_cast<long>(estimate_length(lm, ld.latents[i]));
    const auto diff = std::labs(est - static_cast<long>(ld.lengths[i]));
    exact += diff == 0 ? 1 : 0;
    within2 += diff <= 2 ? 1 : 0;
  }
  if (!holdout.empty()) {
    result.holdout_exact = static_cast<double>(exact) / static_cast<double>(holdout.size());
    result.holdout_within2 = static_cast<double>(within2) / static_cast<double>(holdout.size());
  }
  return result;
}

void store(nn::Checkpoint & ckpt, const LenModel & m)
{
  nn::store_parameters(ckpt, m.parameters());
  ckpt.put("len.input_mean", m.input_mean);
  ckpt.put("len.input_std", m.input_std);
  ckpt.set_meta("len.min_length", m.length_range.min);
  ckpt.set_meta("len.max_length", m.length_range.max);
  ckpt.metadata["len.ae_fingerprint"] = m.ae_fingerprint;
  std::string widths;
  for (const auto & l : m.net.layers) widths += std::to_string(l.in_width()) + ",";
  widths += std::to_string(m.net.out_width());
  ckpt.metadata["len.widths"] = widths;
}

LenModel load_length_estimator(const nn::Checkpoint & ckpt)
{
  LenModel m;
  std::vector<int> widths;
  const auto & text = ckpt.meta("len.widths");
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto comma = text.find(',', pos);
    widths.push_back(std::stoi(text.substr(pos, comma - pos)));
    pos = comma == std::string::npos ? text.size() : comma + 1;
  }
  Rng rng(0);
  m.net = nn::MlpParams::create("len", widths, nn::Activation::Tanh, nn::Activation::Linear, rng);
  nn::restore_parameters(ckpt, m.net.parameters());
  m.input_mean = ckpt.get("len.input_mean");
  m.input_std = ckpt.get("len.input_std");
  m.length_range = {static_cast<int>(ckpt.meta_int("len.min_length")), static_cast<int>(ckpt.meta_int("len.max_length"))};
  m.ae_fingerprint = ckpt.meta("len.ae_fingerprint");
  return m;
}

}  // namespace scenforge::ae
