#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scenforge/gen/latent_gan.hpp"
#include "scenforge/nn/checkpoint.hpp"
#include "scenforge/nn/layers.hpp"
#include "scenforge/trajectory.hpp"

namespace scenforge::gen
{

struct RcganConfig
{
  int noise_dim{8};
  int hidden_size{32};
  int generator_layers{2};
  int iterations{5000};
  std::size_t batch_size{32};
  double lr_g{1e-3};
  double lr_d{1e-3};
  double beta1{0.5};
  double beta2{0.999};
  double clip_norm{5.0};
  LengthRange length_range{};
  std::uint64_t seed{0};
};

/// Length-conditioned recurrent GAN over normalized points. The condition is
/// the length min-max scaled to [0, 1] and appended to every step input of
/// both networks. The generator maps [noise, condition] through an LSTM stack
/// and a linear head to (lat, lon); the discriminator runs a BiLSTM over
/// [point, condition] and emits one logit per step.
struct RcganModel
{
  int noise_dim{8};
  int hidden_size{32};
  LengthRange length_range{};
  NormStats norm{};
  std::vector<nn::LstmParams> generator;
  nn::Linear generator_head;
  nn::LstmParams disc_forward;
  nn::LstmParams disc_backward;
  nn::Linear disc_head;

  static RcganModel create(const RcganConfig & cfg, const LengthRange & range, Rng & rng);
  nn::ParameterList generator_parameters() const;
  nn::ParameterList discriminator_parameters() const;
  double condition(std::size_t length) const;
};

/// Per-step generator outputs for a batch of noise sequences -> (batch x 2 length).
nn::Var rcgan_generate(nn::Tape & tape, const RcganModel & m, const std::vector<nn::Matrix> & noise, std::size_t length);
/// Per-step logits for a (batch x 2 length) point block -> (batch x length).
nn::Var rcgan_discriminate(nn::Tape & tape, const RcganModel & m, nn::Var points, std::size_t length);

struct RcganResult
{
  RcganModel model;
  GanTrainReport report;
};

/// Each iteration draws one length bucket (weighted by its size) and a batch
/// from it, then takes one discriminator and one generator step. The losses
/// are per-step binary cross-entropies averaged over steps and batch; the
/// generator uses the non-saturating form. Expects a normalized dataset.
RcganResult train_rcgan(const Dataset & ds, const RcganConfig & cfg);

/// n denormalized samples of exactly `length` points. Throws ValidationError
/// for a length outside the training range.
Dataset sample_rcgan(const RcganModel & m, std::size_t length, std::size_t n, Rng & rng,
                     const std::string & id_prefix = "rcgan");

void store(nn::Checkpoint & ckpt, const RcganModel & m);
RcganModel load_rcgan(const nn::Checkpoint & ckpt);

}  // namespace scenforge::gen
