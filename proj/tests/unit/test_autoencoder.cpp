#include <gtest/gtest.h>

#include <cmath>

#include "scenforge/ae/length_estimator.hpp"
#include "scenforge/errors.hpp"
#include "scenforge/nn/checkpoint.hpp"
#include "scenforge/synth.hpp"

namespace
{
using namespace scenforge;

ae::AeConfig small_config()
{
  ae::AeConfig cfg;
  cfg.hidden_size = 8;
  cfg.latent_size = 6;
  cfg.epochs = 2;
  cfg.seed = 3;
  return cfg;
}

Dataset small_dataset(std::uint64_t seed = 1)
{
  const auto raw = synth_dataset({16, 6, 6}, SynthParams{}, seed);
  return normalize(raw, fit_normalization(raw));
}

TEST(Autoencoder, ZeroEpochsEqualsInitialization)
{
  auto cfg = small_config();
  cfg.epochs = 0;
  const auto res = ae::train_autoencoder(small_dataset(), cfg);
  Rng init = Rng(cfg.seed).split("init");
  const auto fresh = ae::AeModel::create(cfg, init);
  const auto a = res.model.parameters();
  const auto b = fresh.parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i]->value, b[i]->value) << a[i]->name;
  EXPECT_TRUE(res.history.empty());
}

TEST(Autoencoder, SameSeedSameHistory)
{
  const auto ds = small_dataset();
  const auto a = ae::train_autoencoder(ds, small_config());
  const auto b = ae::train_autoencoder(ds, small_config());
  ASSERT_EQ(a.history.size(), 2u);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
    EXPECT_EQ(a.history[i].val_loss, b.history[i].val_loss);
  }
  EXPECT_EQ(a.model.fingerprint(), b.model.fingerprint());
}

TEST(Autoencoder, EmptyDatasetRejected)
{
  EXPECT_THROW(ae::train_autoencoder(Dataset{}, small_config()), ValidationError);
}

TEST(Autoencoder, LatentWidthIsFixedAndEncodeDeterministic)
{
  const auto ds = small_dataset();
  const auto m = ae::train_autoencoder(ds, small_config()).model;
  const auto & a = ds.trajectories.front();
  const Trajectory * other = nullptr;
  for (const auto & t : ds.trajectories) {
    if (t.length() != a.length()) other = &t;
  }
  ASSERT_NE(other, nullptr);
  const auto za = ae::encode(m, a);
  EXPECT_EQ(za.size(), 6);
  EXPECT_EQ(ae::encode(m, *other).size(), 6);
  EXPECT_EQ(za, ae::encode(m, a));
}

TEST(Autoencoder, DecodeEmitsRequestedLengthAndIsDeterministic)
{
  const auto m = ae::train_autoencoder(small_dataset(), small_config()).model;
  const Eigen::VectorXd z = Eigen::VectorXd::LinSpaced(6, -1.0, 1.0);
  for (std::size_t len : {30u, 41u, 70u}) EXPECT_EQ(ae::decode(m, z, len).length(), len);
  EXPECT_EQ(ae::decode(m, z, 42).points, ae::decode(m, z, 42).points);
  EXPECT_THROW(ae::decode(m, z, 29), ValidationError);
  EXPECT_THROW(ae::decode(m, z, 71), ValidationError);
}

TEST(Autoencoder, ReconstructionLossIsMeanSquaredResidual)
{
  const auto ds = small_dataset();
  const auto m = ae::train_autoencoder(ds, small_config()).model;
  const auto & t = ds.trajectories.front();
  const auto rec = ae::decode(m, ae::encode(m, t), t.length());
  double sq = 0.0;
  for (std::size_t i = 0; i < t.length(); ++i) {
    sq += std::pow(rec.points[i].lat - t.points[i].lat, 2) + std::pow(rec.points[i].lon - t.points[i].lon, 2);
  }
  const double expected = sq / static_cast<double>(2 * t.length());
  EXPECT_NEAR(ae::reconstruction_loss(m, t), expected, 1e-12);
  const auto losses = ae::reconstruction_losses(m, ds);
  EXPECT_NEAR(losses.front(), ae::reconstruction_loss(m, t), 1e-12);
  for (double l : losses) EXPECT_GE(l, 0.0);
}

TEST(Autoencoder, CheckpointRoundTripPreservesFingerprintAndOutputs)
{
  const auto ds = small_dataset();
  const auto m = ae::train_autoencoder(ds, small_config()).model;
  nn::Checkpoint c;
  ae::store(c, m);
  const auto back = ae::load_autoencoder(nn::deserialize_checkpoint(nn::serialize_checkpoint(c)));
  EXPECT_EQ(back.latent_size, m.latent_size);
  EXPECT_EQ(back.norm, m.norm);
  const auto & t = ds.trajectories.front();
  EXPECT_LT((ae::encode(back, t) - ae::encode(m, t)).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(LengthEstimator, RoundingAndClamping)
{
  const LengthRange r{30, 70};
  EXPECT_EQ(ae::round_length(41.4, r), 41u);
  EXPECT_EQ(ae::round_length(41.6, r), 42u);
  EXPECT_EQ(ae::round_length(12.0, r), 30u);
  EXPECT_EQ(ae::round_length(99.0, r), 70u);
}

ae::LatentDataset random_latents(std::size_t n, std::size_t fixed_length, Rng & rng)
{
  ae::LatentDataset ld;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd z(4);
    for (int k = 0; k < 4; ++k) z(k) = rng.normal();
    ld.ids.push_back(std::to_string(i));
    ld.latents.push_back(z);
    ld.lengths.push_back(fixed_length ? fixed_length : 30 + rng.index(41));
  }
  return ld;
}

TEST(LengthEstimator, ConstantLengthCollapsesToConstant)
{
  Rng rng(1);
  const auto ld = random_latents(60, 45, rng);
  ae::LenConfig cfg;
  cfg.epochs = 1000;
  const auto res = ae::train_length_estimator(ld, {30, 70}, cfg);
  for (const auto & z : ld.latents) EXPECT_NEAR(res.model.raw_length(z), 45.0, 1.0);
  EXPECT_EQ(res.holdout_within2, 1.0);
}

TEST(LengthEstimator, LearnsLinearLengthCode)
{
  Rng rng(2);
  auto ld = random_latents(400, 0, rng);
  for (std::size_t i = 0; i < ld.size(); ++i) ld.latents[i](0) = (static_cast<double>(ld.lengths[i]) - 50.0) / 10.0;
  const auto res = ae::train_length_estimator(ld, {30, 70}, ae::LenConfig{});
  EXPECT_GE(res.holdout_within2, 0.95);
}

TEST(LengthEstimator, DeterministicAndValidatesInput)
{
  Rng rng(3);
  const auto ld = random_latents(40, 0, rng);
  ae::LenConfig cfg;
  cfg.epochs = 10;
  const auto a = ae::train_length_estimator(ld, {30, 70}, cfg);
  const auto b = ae::train_length_estimator(ld, {30, 70}, cfg);
  EXPECT_EQ(a.train_loss, b.train_loss);
  Rng rng2(4);
  EXPECT_THROW(ae::train_length_estimator(random_latents(5, 0, rng2), {30, 70}, cfg), ValidationError);
  EXPECT_THROW(ae::train_length_estimator(ae::LatentDataset{}, {30, 70}, cfg), ValidationError);
}

TEST(LengthEstimator, CheckpointRoundTrip)
{
  Rng rng(5);
  const auto ld = random_latents(30, 0, rng);
  ae::LenConfig cfg;
  cfg.epochs = 5;
  const auto m = ae::train_length_estimator(ld, {30, 70}, cfg, "abc").model;
  nn::Checkpoint c;
  ae::store(c, m);
  const auto back = ae::load_length_estimator(c);
  EXPECT_EQ(back.ae_fingerprint, "abc");
  EXPECT_NEAR(back.raw_length(ld.latents[0]), m.raw_length(ld.latents[0]), 1e-3);
}

}  // namespace
