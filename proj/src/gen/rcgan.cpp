#include "scenforge/gen/rcgan.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "scenforge/errors.hpp"
#include "scenforge/nn/adam.hpp"

namespace scenforge::gen
{
namespace
{
using nn::Matrix;
using nn::Tape;
using nn::Var;

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, Rng & rng)
{
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

std::vector<Var> generate_steps(Tape & tape, const RcganModel & m, const std::vector<Matrix> & noise, double cond)
{
  std::vector<Var> steps;
  steps.reserve(noise.size());
  for (const auto & z : noise) {
    Matrix x(z.rows(), z.cols() + 1);
    x << z, Matrix::Constant(z.rows(), 1, cond);
    steps.push_back(tape.constant(std::move(x)));
  }
  for (const auto & layer : m.generator) {
    steps = nn::forward_lstm(tape, layer, steps).outputs;
  }
  for (auto & s : steps) s = m.generator_head.forward(tape, s);
  return steps;
}

// Logits stacked step-major: rows [t * batch, (t + 1) * batch) belong to step t.
Var discriminate_steps(Tape & tape, const RcganModel & m, const std::vector<Var> & points, double cond)
{
  std::vector<Var> inputs;
  inputs.reserve(points.size());
  for (const auto & p : points) {
    inputs.push_back(nn::concat_cols({p, tape.constant(Matrix::Constant(p.rows(), 1, cond))}));
  }
  const auto hidden = nn::forward_bilstm(tape, m.disc_forward, m.disc_backward, inputs);
  return m.disc_head.forward(tape, nn::concat_rows(hidden));
}

std::vector<Var> real_steps(Tape & tape, const std::vector<const Trajectory *> & batch, std::size_t length)
{
  std::vector<Var> steps;
  steps.reserve(length);
  for (std::size_t t = 0; t < length; ++t) {
    Matrix x(static_cast<Eigen::Index>(batch.size()), 2);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      x(static_cast<Eigen::Index>(b), 0) = batch[b]->points[t].lat;
      x(static_cast<Eigen::Index>(b), 1) = batch[b]->points[t].lon;
    }
    steps.push_back(tape.constant(std::move(x)));
  }
  return steps;
}

void check_finite(double v, const char * what, int iter)
{
  if (!std::isfinite(v)) {
    throw NumericError(fmt::format("RC-GAN {} became non-finite at iteration {}", what, iter));
  }
}

}  // namespace

RcganModel RcganModel::create(const RcganConfig & cfg, const LengthRange & range, Rng & rng)
{
  if (cfg.noise_dim < 1 || cfg.hidden_size < 1 || cfg.generator_layers < 1) {
    throw ConfigError("RC-GAN sizes must be positive");
  }
  if (range.min >= range.max) {
    throw ConfigError("RC-GAN length range must satisfy min < max");
  }
  RcganModel m;
  m.noise_dim = cfg.noise_dim;
  m.hidden_size = cfg.hidden_size;
  m.length_range = range;
  for (int l = 0; l < cfg.generator_layers; ++l) {
    m.generator.push_back(nn::LstmParams::create(
      "rcgan.gen" + std::to_string(l), l == 0 ? cfg.noise_dim + 1 : cfg.hidden_size, cfg.hidden_size, rng));
  }
  m.generator_head = nn::Linear::create("rcgan.gen_head", cfg.hidden_size, 2, rng);
  m.disc_forward = nn::LstmParams::create("rcgan.disc_fwd", 3, cfg.hidden_size, rng);
  m.disc_backward = nn::LstmParams::create("rcgan.disc_bwd", 3, cfg.hidden_size, rng);
  m.disc_head = nn::Linear::create("rcgan.disc_head", 2 * cfg.hidden_size, 1, rng);
  return m;
}

nn::ParameterList RcganModel::generator_parameters() const
{
  nn::ParameterList out;
  for (const auto & l : generator) l.append_parameters(out);
  generator_head.append_parameters(out);
  return out;
}

nn::ParameterList RcganModel::discriminator_parameters() const
{
  nn::ParameterList out;
  disc_forward.append_parameters(out);
  disc_backward.append_parameters(out);
  disc_head.append_parameters(out);
  return out;
}

double RcganModel::condition(std::size_t length) const
{
  return (static_cast<double>(length) - length_range.min) / static_cast<double>(length_range.max - length_range.min);
}

Var rcgan_generate(Tape & tape, const RcganModel & m, const std::vector<Matrix> & noise, std::size_t length)
{
  if (noise.size() != length) {
    throw ShapeError(fmt::format("RC-GAN needs one noise block per step: {} != {}", noise.size(), length));
  }
  return nn::concat_cols(generate_steps(tape, m, noise, m.condition(length)));
}

Var rcgan_discriminate(Tape & tape, const RcganModel & m, Var points, std::size_t length)
{
  if (points.cols() != static_cast<Eigen::Index>(2 * length)) {
    throw ShapeError("RC-GAN discriminator input width does not match the length");
  }
  std::vector<Var> steps;
  for (std::size_t t = 0; t < length; ++t) steps.push_back(nn::slice_cols(points, static_cast<Eigen::Index>(2 * t), 2));
  const Var stacked = discriminate_steps(tape, m, steps, m.condition(length));
  const Eigen::Index b = points.rows();
  std::vector<Var> cols;
  for (std::size_t t = 0; t < length; ++t) cols.push_back(nn::slice_rows(stacked, static_cast<Eigen::Index>(t) * b, b));
  return nn::concat_cols(cols);
}

RcganResult train_rcgan(const Dataset & ds, const RcganConfig & cfg)
{
  if (ds.empty()) {
    throw ValidationError("RC-GAN needs a non-empty dataset");
  }
  if (cfg.batch_size == 0 || cfg.iterations < 0) {
    throw ConfigError("RC-GAN batch_size must be positive");
  }
  const LengthRange range = cfg.length_range;
  for (const auto & t : ds.trajectories) {
    if (!range.contains(t.length())) {
      throw ValidationError(fmt::format("trajectory '{}' has {} points, outside [{}, {}]", t.id, t.length(),
                                        range.min, range.max));
    }
  }
  const Rng root(cfg.seed);
  Rng init_rng = root.split("init");
  RcganResult res{RcganModel::create(cfg, range, init_rng), {}};
  RcganModel & m = res.model;
  if (ds.norm_stats) m.norm = *ds.norm_stats;

  const auto buckets = batch_by_length(ds);
  std::vector<std::size_t> bucket_of;
  for (std::size_t i = 0; i < buckets.size(); ++i) bucket_of.insert(bucket_of.end(), buckets[i].members.size(), i);

  const auto g_params = m.generator_parameters();
  const auto d_params = m.discriminator_parameters();
  nn::AdamState g_adam(g_params, {cfg.lr_g, cfg.beta1, cfg.beta2});
  nn::AdamState d_adam(d_params, {cfg.lr_d, cfg.beta1, cfg.beta2});

  for (int it = 0; it < cfg.iterations; ++it) {
    Rng rng = root.split("iter").split(static_cast<std::uint64_t>(it));
    const auto & bucket = buckets[bucket_of[rng.index(bucket_of.size())]];
    const std::size_t length = bucket.length;
    const std::size_t count = std::min(cfg.batch_size, bucket.members.size());
    std::vector<const Trajectory *> batch;
    for (auto i : sample_indices(bucket.members.size(), count, rng)) batch.push_back(bucket.members[i]);
    const auto b = static_cast<Eigen::Index>(count);
    const double cond = m.condition(length);

    std::vector<Matrix> noise;
    noise.reserve(length);
    for (std::size_t t = 0; t < length; ++t) noise.push_back(gaussian(b, m.noise_dim, rng));
    Tape g_tape;
    const auto fake = generate_steps(g_tape, m, noise, cond);

    GanIterRecord rec;
    rec.iter = it;
    {
      Tape tape;
      const auto real = real_steps(tape, batch, length);
      std::vector<Var> joint;
      joint.reserve(length);
      for (std::size_t t = 0; t < length; ++t) joint.push_back(nn::concat_rows({real[t], tape.constant(fake[t].value())}));
      const Var logits = discriminate_steps(tape, m, joint, cond);
      std::vector<Var> real_logits;
      std::vector<Var> fake_logits;
      for (std::size_t t = 0; t < length; ++t) {
        const auto base = static_cast<Eigen::Index>(t) * 2 * b;
        real_logits.push_back(nn::slice_rows(logits, base, b));
        fake_logits.push_back(nn::slice_rows(logits, base + b, b));
      }
      const Var loss = nn::add(
        nn::bce_with_logits(nn::concat_rows(real_logits), 1.0), nn::bce_with_logits(nn::concat_rows(fake_logits), 0.0));
      check_finite(loss.scalar(), "discriminator loss", it);
      nn::zero_grad(d_params);
      tape.backward(loss);
      nn::clip_grad_norm(d_params, cfg.clip_norm);
      nn::adam_step(d_adam, d_params);
      rec.d_loss = loss.scalar();
    }
    const Var g_loss = nn::bce_with_logits(discriminate_steps(g_tape, m, fake, cond), 1.0);
    check_finite(g_loss.scalar(), "generator loss", it);
    nn::zero_grad(g_params);
    g_tape.backward(g_loss);
    nn::zero_grad(d_params);
    nn::clip_grad_norm(g_params, cfg.clip_norm);
    nn::adam_step(g_adam, g_params);
    rec.g_loss = g_loss.scalar();
    res.report.records.push_back(rec);
  }
  return res;
}

Dataset sample_rcgan(const RcganModel & m, std::size_t length, std::size_t n, Rng & rng, const std::string & id_prefix)
{
  if (!m.length_range.contains(length)) {
    throw ValidationError(fmt::format(
      "requested length {} is outside the trained range [{}, {}]", length, m.length_range.min, m.length_range.max));
  }
  Dataset out;
  if (n == 0) return out;
  std::vector<Matrix> noise;
  noise.reserve(length);
  for (std::size_t t = 0; t < length; ++t) noise.push_back(gaussian(static_cast<Eigen::Index>(n), m.noise_dim, rng));
  Tape tape;
  const Matrix points = rcgan_generate(tape, m, noise, length).value();
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    Trajectory t;
    t.id = fmt::format("{}-{}-{}", id_prefix, length, i);
    t.points.resize(length);
    for (std::size_t k = 0; k < length; ++k) {
      t.points[k] = {points(i, static_cast<Eigen::Index>(2 * k)), points(i, static_cast<Eigen::Index>(2 * k + 1))};
    }
    out.trajectories.push_back(denormalize(t, m.norm));
  }
  return out;
}

void store(nn::Checkpoint & ckpt, const RcganModel & m)
{
  nn::store_parameters(ckpt, m.generator_parameters());
  nn::store_parameters(ckpt, m.discriminator_parameters());
  ckpt.set_meta("rcgan.noise_dim", m.noise_dim);
  ckpt.set_meta("rcgan.hidden_size", m.hidden_size);
  ckpt.set_meta("rcgan.generator_layers", static_cast<double>(m.generator.size()));
  ckpt.set_meta("rcgan.min_length", m.length_range.min);
  ckpt.set_meta("rcgan.max_length", m.length_range.max);
  ckpt.set_meta("norm.mean_lat", m.norm.mean_lat);
  ckpt.set_meta("norm.mean_lon", m.norm.mean_lon);
  ckpt.set_meta("norm.std_lat", m.norm.std_lat);
  ckpt.set_meta("norm.std_lon", m.norm.std_lon);
}

RcganModel load_rcgan(const nn::Checkpoint & ckpt)
{
  RcganConfig cfg;
  cfg.noise_dim = static_cast<int>(ckpt.meta_int("rcgan.noise_dim"));
  cfg.hidden_size = static_cast<int>(ckpt.meta_int("rcgan.hidden_size"));
  cfg.generator_layers = static_cast<int>(ckpt.meta_int("rcgan.generator_layers"));
  const LengthRange range{
    static_cast<int>(ckpt.meta_int("rcgan.min_length")), static_cast<int>(ckpt.meta_int("rcgan.max_length"))};
  Rng rng(0);
  RcganModel m = RcganModel::create(cfg, range, rng);
  nn::restore_parameters(ckpt, m.generator_parameters());
  nn::restore_parameters(ckpt, m.discriminator_parameters());
  m.norm = {ckpt.meta_double("norm.mean_lat"), ckpt.meta_double("norm.mean_lon"), ckpt.meta_double("norm.std_lat"),
            ckpt.meta_double("norm.std_lon")};
  return m;
}

}  // namespace scenforge::gen
