#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "scenforge/nn/checkpoint.hpp"
#include "scenforge/nn/layers.hpp"
#include "scenforge/trajectory.hpp"

namespace scenforge::ae
{

using LatentVector = Eigen::VectorXd;

struct AeConfig
{
  int hidden_size{32};
  int latent_size{32};
  int layers{2};
  int epochs{200};
  double lr{2e-3};
  std::uint64_t seed{0};
  double val_fraction{0.2};
  std::size_t batch_size{32};
  double clip_norm{5.0};
  LengthRange length_range{};
};

/// Sequence-to-sequence LSTM autoencoder. The latent is a linear projection of
/// the top encoder layer's final hidden state; linear bridges map it to the
/// decoder's initial (h, c) per layer. The decoder is autoregressive: its
/// input at step t is the point it emitted at t-1 (zeros at the first step).
struct AeModel
{
  int hidden_size{0};
  int latent_size{0};
  LengthRange length_range{};
  NormStats norm{};
  std::vector<nn::LstmParams> encoder;
  nn::Linear to_latent;
  std::vector<nn::Linear> bridge_h;
  std::vector<nn::Linear> bridge_c;
  std::vector<nn::LstmParams> decoder;
  nn::Linear head;

  static AeModel create(const AeConfig & cfg, Rng & rng);
  nn::ParameterList parameters() const;
  /// Hash of the float32 parameter payload; ties downstream models to this AE.
  std::string fingerprint() const;
};

struct EpochRecord
{
  int epoch{0};
  double train_loss{0.0};
  double val_loss{0.0};
};

struct AeTrainResult
{
  AeModel model;
  std::vector<EpochRecord> history;
  std::vector<std::string> val_ids;
};

/// Trains on an already-normalized dataset (ds.norm_stats is copied into the
/// model). Batches are length buckets split into chunks of batch_size and
/// visited in a fresh shuffled order every epoch. Throws NumericError naming
/// the epoch if a loss goes non-finite.
AeTrainResult train_autoencoder(const Dataset & ds, const AeConfig & cfg);

/// Batched encoder: all members share one length. Returns (batch x latent).
nn::Var encode_batch(nn::Tape & tape, const AeModel & m, const std::vector<const Trajectory *> & batch);
/// Batched decoder rollout of `length` steps from latents z (batch x latent).
/// Returns (batch x 2 length) laid out [lat_0, lon_0, lat_1, lon_1, ...].
nn::Var decode_batch(nn::Tape & tape, const AeModel & m, nn::Var z, std::size_t length);

LatentVector encode(const AeModel & m, const Trajectory & t);
/// Throws ValidationError if `length` is outside the model's length range.
Trajectory decode(const AeModel & m, const LatentVector & z, std::size_t length);
/// Mean squared error between t and decode(encode(t), len(t)).
double reconstruction_loss(const AeModel & m, const Trajectory & t);
/// Same quantity for a whole (normalized) dataset, evaluated in length batches.
std::vector<double> reconstruction_losses(const AeModel & m, const Dataset & ds);

/// Flattens points into the decoder output layout.
Eigen::RowVectorXd flatten_points(const Trajectory & t);

void store(nn::Checkpoint & ckpt, const AeModel & m);
AeModel load_autoencoder(const nn::Checkpoint & ckpt);

}  // namespace scenforge::ae
