#include "scenforge/ae/autoencoder.hpp"

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
using nn::Tape;
using nn::Var;

constexpr Eigen::Index kEncoderInputs = 3;

// Encoder input: (lat, lon, elapsed seconds).
Matrix step_inputs(const std::vector<const Trajectory *> & batch, std::size_t t)
{
  Matrix x(static_cast<Eigen::Index>(batch.size()), kEncoderInputs);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    x(static_cast<Eigen::Index>(b), 0) = batch[b]->points[t].lat;
    x(static_cast<Eigen::Index>(b), 1) = batch[b]->points[t].lon;
    x(static_cast<Eigen::Index>(b), 2) = static_cast<double>(t) / kSampleRateHz;
  }
  return x;
}

Matrix flat_targets(const std::vector<const Trajectory *> & batch, std::size_t length)
{
  Matrix y(static_cast<Eigen::Index>(batch.size()), static_cast<Eigen::Index>(2 * length));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    y.row(static_cast<Eigen::Index>(b)) = flatten_points(*batch[b]);
  }
  return y;
}

struct Chunk
{
  std::size_t length;
  std::vector<const Trajectory *> members;
};

std::vector<Chunk> make_chunks(const Dataset & ds, std::size_t batch_size)
{
  std::vector<Chunk> chunks;
  for (const auto & lb : batch_by_length(ds)) {
    for (std::size_t start = 0; start < lb.members.size(); start += batch_size) {
      const auto end = std::min(lb.members.size(), start + batch_size);
      chunks.push_back({lb.length, {lb.members.begin() + static_cast<std::ptrdiff_t>(start),
                                    lb.members.begin() + static_cast<std::ptrdiff_t>(end)}});
    }
  }
  return chunks;
}

Var batch_loss(Tape & tape, const AeModel & m, const Chunk & c)
{
  const Var z = encode_batch(tape, m, c.members);
  const Var out = decode_batch(tape, m, z, c.length);
  return nn::mse(out, flat_targets(c.members, c.length));
}

double evaluate_loss(const AeModel & m, const std::vector<Chunk> & chunks)
{
  if (chunks.empty()) return 0.0;
  double total = 0.0;
  for (const auto & c : chunks) {
    Tape tape;
    total += batch_loss(tape, m, c).scalar();
  }
  return total / static_cast<double>(chunks.size());
}
}  // namespace

AeModel AeModel::create(const AeConfig & cfg, Rng & rng)
{
  if (cfg.hidden_size < 1 || cfg.latent_size < 1 || cfg.layers < 1) {
    throw ConfigError("autoencoder sizes must be positive");
  }
  AeModel m;
  m.hidden_size = cfg.hidden_size;
  m.latent_size = cfg.latent_size;
  m.length_range = cfg.length_range;
  for (int l = 0; l < cfg.layers; ++l) {
    m.encoder.push_back(
      nn::LstmParams::create("ae.enc" + std::to_string(l), l == 0 ? kEncoderInputs : cfg.hidden_size, cfg.hidden_size, rng));
  }
  m.to_latent = nn::Linear::create("ae.latent", cfg.hidden_size, cfg.latent_size, rng);
  for (int l = 0; l < cfg.layers; ++l) {
    m.bridge_h.push_back(nn::Linear::create("ae.bridge_h" + std::to_string(l), cfg.latent_size, cfg.hidden_size, rng));
    m.bridge_c.push_back(nn::Linear::create("ae.bridge_c" + std::to_string(l), cfg.latent_size, cfg.hidden_size, rng));
  }
  for (int l = 0; l < cfg.layers; ++l) {
    m.decoder.push_back(
      nn::LstmParams::create("ae.dec" + std::to_string(l), l == 0 ? 2 : cfg.hidden_size, cfg.hidden_size, rng));
  }
  m.head = nn::Linear::create("ae.head", cfg.hidden_size, 2, rng);
  return m;
}

nn::ParameterList AeModel::parameters() const
{
  nn::ParameterList out;
  for (const auto & l : encoder) l.append_parameters(out);
  to_latent.append_parameters(out);
  for (const auto & l : bridge_h) l.append_parameters(out);
  for (const auto & l : bridge_c) l.append_parameters(out);
  for (const auto & l : decoder) l.append_parameters(out);
  head.append_parameters(out);
  return out;
}

std::string AeModel::fingerprint() const
{
  nn::Checkpoint c;
  nn::store_parameters(c, parameters());
  return nn::checkpoint_hash(c);
}

Eigen::RowVectorXd flatten_points(const Trajectory & t)
{
  Eigen::RowVectorXd v(static_cast<Eigen::Index>(2 * t.length()));
  for (std::size_t i = 0; i < t.length(); ++i) {
    v(static_cast<Eigen::Index>(2 * i)) = t.points[i].lat;
    v(static_cast<Eigen::Index>(2 * i + 1)) = t.points[i].lon;
  }
  return v;
}

Var encode_batch(Tape & tape, const AeModel & m, const std::vector<const Trajectory *> & batch)
{
  if (batch.empty()) {
    throw ValidationError("cannot encode an empty batch");
  }
  const std::size_t length = batch.front()->length();
  if (length == 0) {
    throw ValidationError("cannot encode an empty trajectory");
  }
  for (const auto * t : batch) {
    if (t->length() != length) {
      throw ShapeError("encode_batch: members differ in length");
    }
  }
  std::vector<Var> steps;
  steps.reserve(length);
  for (std::size_t t = 0; t < length; ++t) {
    steps.push_back(tape.constant(step_inputs(batch, t)));
  }
  nn::LstmState last;
  for (const auto & layer : m.encoder) {
    auto out = nn::forward_lstm(tape, layer, steps);
    steps = std::move(out.outputs);
    last = out.final;
  }
  return m.to_latent.forward(tape, last.h);
}

Var decode_batch(Tape & tape, const AeModel & m, Var z, std::size_t length)
{
  if (z.cols() != m.latent_size) {
    throw ShapeError("decode: latent width " + std::to_string(z.cols()) + " != " + std::to_string(m.latent_size));
  }
  std::vector<nn::LstmState> states;
  states.reserve(m.decoder.size());
  for (std::size_t l = 0; l < m.decoder.size(); ++l) {
    states.push_back({m.bridge_h[l].forward(tape, z), m.bridge_c[l].forward(tape, z)});
  }
  Var prev = tape.constant(Matrix::Zero(z.rows(), 2));
  std::vector<Var> outputs;
  outputs.reserve(length);
  for (std::size_t t = 0; t < length; ++t) {
    Var x = prev;
    for (std::size_t l = 0; l < m.decoder.size(); ++l) {
      states[l] = nn::lstm_step(tape, m.decoder[l], x, states[l]);
      x = states[l].h;
    }
    prev = m.head.forward(tape, x);
    outputs.push_back(prev);
  }
  return nn::concat_cols(outputs);
}

LatentVector encode(const AeModel & m, const Trajectory & t)
{
  Tape tape;
  const Var z = encode_batch(tape, m, {&t});
  return z.value().row(0).transpose();
}

Trajectory decode(const AeModel & m, const LatentVector & z, std::size_t length)
{
  if (!m.length_range.contains(length)) {
    throw ValidationError(
      "decode length " + std::to_string(length) + " outside [" + std::to_string(m.length_range.min) + ", " +
      std::to_string(m.length_range.max) + "]");
  }
  Tape tape;
  const Var out = decode_batch(tape, m, tape.constant(z.transpose()), length);
  Trajectory t;
  t.points.resize(length);
  for (std::size_t i = 0; i < length; ++i) {
    t.points[i] = {out.value()(0, static_cast<Eigen::Index>(2 * i)), out.value()(0, static_cast<Eigen::Index>(2 * i + 1))};
  }
  return t;
}

double reconstruction_loss(const AeModel & m, const Trajectory & t)
{
  const Trajectory r = decode(m, encode(m, t), t.length());
  return (flatten_points(r) - flatten_points(t)).squaredNorm() / static_cast<double>(2 * t.length());
}

std::vector<double> reconstruction_losses(const AeModel & m, const Dataset & ds)
{
  std::vector<double> losses(ds.size(), 0.0);
  for (const auto & c : make_chunks(ds, 256)) {
    Tape tape;
    const Var out = decode_batch(tape, m, encode_batch(tape, m, c.members), c.length);
    const Matrix diff = out.value() - flat_targets(c.members, c.length);
    for (std::size_t b = 0; b < c.members.size(); ++b) {
      const auto idx = static_cast<std::size_t>(c.members[b] - ds.trajectories.data());
      losses[idx] = diff.row(static_cast<Eigen::Index>(b)).squaredNorm() / static_cast<double>(diff.cols());
    }
  }
  return losses;
}

AeTrainResult train_autoencoder(const Dataset & ds, const AeConfig & cfg)
{
  if (ds.empty()) {
    throw ValidationError("cannot train an autoencoder on an empty dataset");
  }
  const Rng root(cfg.seed);
  Rng init_rng = root.split("init");
  AeTrainResult result{AeModel::create(cfg, init_rng), {}, {}};
  AeModel & model = result.model;
  model.norm = ds.norm_stats.value_or(NormStats{});

  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng = root.split("split");
  std::shuffle(order.begin(), order.end(), split_rng);
  std::size_t n_val = static_cast<std::size_t>(std::lround(cfg.val_fraction * static_cast<double>(ds.size())));
  if (cfg.val_fraction > 0.0 && ds.size() >= 2) n_val = std::clamp<std::size_t>(n_val, 1, ds.size() - 1);
  Dataset train;
  Dataset val;
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k < n_val ? val : train).trajectories.push_back(ds.trajectories[order[k]]);
  }
  for (const auto & t : val.trajectories) result.val_ids.push_back(t.id);

  auto train_chunks = make_chunks(train, cfg.batch_size);
  const auto val_chunks = make_chunks(val, cfg.batch_size);
  const auto params = model.parameters();
  nn::AdamState adam(params, {cfg.lr});

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng epoch_rng = root.split("epoch").split(static_cast<std::uint64_t>(epoch));
    std::shuffle(train_chunks.begin(), train_chunks.end(), epoch_rng);
    double total = 0.0;
    for (const auto & c : train_chunks) {
      nn::zero_grad(params);
      Tape tape;
      Var loss;
      try {
        loss = batch_loss(tape, model, c);
        tape.backward(loss);
      } catch (const NumericError & e) {
        throw NumericError("autoencoder epoch " + std::to_string(epoch) + ": " + e.what());
      }
      total += loss.scalar();
      nn::clip_grad_norm(params, cfg.clip_norm);
      nn::adam_step(adam, params);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_chunks.empty() ? 0.0 : total / static_cast<double>(train_chunks.size());
    rec.val_loss = evaluate_loss(model, val_chunks);
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss)) {
      throw NumericError("autoencoder loss is not finite at epoch " + std::to_string(epoch));
    }
    result.history.push_back(rec);
  }
  return result;
}

void store(nn::Checkpoint & ckpt, const AeModel & m)
{
  nn::store_parameters(ckpt, m.parameters());
  ckpt.set_meta("ae.hidden_size", m.hidden_size);
  ckpt.set_meta("ae.latent_size", m.latent_size);
  ckpt.set_meta("ae.layers", static_cast<double>(m.encoder.size()));
  ckpt.set_meta("ae.min_length", m.length_range.min);
  ckpt.set_meta("ae.max_length", m.length_range.max);
  ckpt.set_meta("norm.mean_lat", m.norm.mean_lat);
  ckpt.set_meta("norm.mean_lon", m.norm.mean_lon);
  ckpt.set_meta("norm.std_lat", m.norm.std_lat);
  ckpt.set_meta("norm.std_lon", m.norm.std_lon);
}

AeModel load_autoencoder(const nn::Checkpoint & ckpt)
{
  AeConfig cfg;
  cfg.hidden_size = static_cast<int>(ckpt.meta_int("ae.hidden_size"));
  cfg.latent_size = static_cast<int>(ckpt.meta_int("ae.latent_size"));
  cfg.layers = static_cast<int>(ckpt.meta_int("ae.layers"));
  cfg.length_range = {static_cast<int>(ckpt.meta_int("ae.min_length")), static_cast<int>(ckpt.meta_int("ae.max_length"))};
  Rng rng(0);
  AeModel m = AeModel::create(cfg, rng);
  nn::restore_parameters(ckpt, m.parameters());
  m.norm = {ckpt.meta_double("norm.mean_lat"), ckpt.meta_double("norm.mean_lon"), ckpt.meta_double("norm.std_lat"),
            ckpt.meta_double("norm.std_lon")};
  return m;
}

}  // namespace scenforge::ae
