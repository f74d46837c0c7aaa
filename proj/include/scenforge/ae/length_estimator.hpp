#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "scenforge/ae/autoencoder.hpp"

namespace scenforge::ae
{

/// Paired sets: latents X and the lengths Y they came from.
struct LatentDataset
{
  std::vector<std::string> ids;
  std::vector<LatentVector> latents;
  std::vector<std::size_t> lengths;

  std::size_t size() const { return latents.size(); }
};

/// Encodes every trajectory of a normalized dataset.
LatentDataset encode_dataset(const AeModel & m, const Dataset & ds);

struct LenConfig
{
  std::vector<int> hidden{64, 64};
  int epochs{400};
  // Peak learning rate, cosine-annealed to zero over the epochs.
  double lr{3e-3};
  std::size_t batch_size{64};
  double holdout_fraction{0.2};
  std::uint64_t seed{0};
};

/// Feed-forward regression head latent -> length. Inputs are standardized with
/// statistics of the training latents; the target is the length min-max scaled
/// to [0, 1] over the AE's length range.
struct LenModel
{
  nn::MlpParams net;
  Eigen::RowVectorXd input_mean;
  Eigen::RowVectorXd input_std;
  LengthRange length_range{};
  std::string ae_fingerprint;

  /// Unrounded prediction in frames.
  double raw_length(const LatentVector & z) const;
  nn::ParameterList parameters() const { return net.parameters(); }
};

struct LenTrainResult
{
  LenModel model;
  std::vector<double> train_loss;
  // Held-out rows of the input LatentDataset and the share predicted exactly
  // / within +-2 frames after rounding.
  std::vector<std::size_t> holdout_rows;
  double holdout_exact{0.0};
  double holdout_within2{0.0};
};

/// Needs at least 10 latents; throws ValidationError otherwise.
LenTrainResult train_length_estimator(const LatentDataset & ld, const LengthRange & range, const LenConfig & cfg,
                                      const std::string & ae_fingerprint = {});

/// Rounded to nearest and clamped into the model's range.
std::size_t estimate_length(const LenModel & lm, const LatentVector & z);
/// Rounding/clamping rule on its own.
std::size_t round_length(double raw, const LengthRange & range);

void store(nn::Checkpoint & ckpt, const LenModel & m);
LenModel load_length_estimator(const nn::Checkpoint & ckpt);

}  // namespace scenforge::ae
