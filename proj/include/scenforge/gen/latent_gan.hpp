#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "scenforge/ae/autoencoder.hpp"
#include "scenforge/ae/length_estimator.hpp"
#include "scenforge/nn/checkpoint.hpp"
#include "scenforge/nn/layers.hpp"

namespace scenforge::gen
{

enum class GanMode { StandardGan, WganGp };
enum class NetKind { Mlp, ResNet };

std::string to_string(GanMode mode);
std::string to_string(NetKind kind);
GanMode parse_gan_mode(const std::string & s);
NetKind parse_net_kind(const std::string & s);

/// Maps a (batch x d) input node to a (batch x 1) score node.
using Critic = std::function<nn::Var(nn::Tape &, nn::Var)>;

/// Central-difference estimate of d critic / d x at every row of x, built from
/// 2 d stacked critic evaluations so it stays differentiable w.r.t. the critic
/// parameters. Returns (batch x d).
nn::Var fd_input_gradient(nn::Tape & tape, const Critic & critic, const nn::Matrix & x, double h);

struct GpSample
{
  double penalty{0.0};
  double mean_grad_norm{0.0};
};

/// mean over the batch of (||g(x_hat)|| - 1)^2 with x_hat = e x_real + (1 - e) x_fake,
/// e ~ U(0, 1) per row and g the finite-difference input gradient. Not scaled
/// by lambda. Throws ValidationError for h <= 0 or mismatched batches.
nn::Var gradient_penalty(
  nn::Tape & tape, const Critic & critic, const nn::Matrix & x_real, const nn::Matrix & x_fake, Rng & rng,
  double h = 1e-3, GpSample * info = nullptr);

struct LatentGanConfig
{
  GanMode mode{GanMode::WganGp};
  NetKind net{NetKind::Mlp};
  int noise_dim{16};
  std::vector<int> hidden{64, 64};
  // ResNet only: width of the residual trunk and number of blocks.
  int resnet_width{64};
  int resnet_blocks{2};
  int iterations{2000};
  std::size_t batch_size{64};
  int n_critic{5};
  double lambda_gp{10.0};
  double gp_h{1e-3};
  double lr_g{1e-4};
  double lr_d{1e-4};
  double beta1{0.5};
  double beta2{0.9};
  int snapshot_every{0};
  std::size_t snapshot_size{16};
  std::uint64_t seed{0};
};

/// Generator and critic/discriminator over standardized AE latents. The
/// discriminator net emits a logit; discriminate() applies the sigmoid in the
/// StandardGan mode and returns the raw critic value for WganGp.
struct LatentGanModel
{
  GanMode mode{GanMode::WganGp};
  NetKind net_kind{NetKind::Mlp};
  int noise_dim{16};
  int latent_size{0};
  double lambda_gp{10.0};
  nn::FeedForward generator;
  nn::FeedForward discriminator;
  Eigen::RowVectorXd latent_mean;
  Eigen::RowVectorXd latent_std;
  std::string ae_fingerprint;

  static LatentGanModel create(const LatentGanConfig & cfg, int latent_size, Rng & rng);
  nn::ParameterList generator_parameters() const { return nn::parameters_of(generator); }
  nn::ParameterList discriminator_parameters() const { return nn::parameters_of(discriminator); }
  /// Scores raw (unstandardized) latents, one row each.
  Eigen::VectorXd discriminate(const Eigen::MatrixXd & latents) const;
};

struct GanIterRecord
{
  int iter{0};
  double d_loss{0.0};
  double g_loss{0.0};
  double gp{0.0};
  double grad_norm{0.0};
};

struct GanSnapshot
{
  int iter{0};
  Eigen::MatrixXd samples;
};

struct GanTrainReport
{
  std::vector<GanIterRecord> records;
  std::vector<GanSnapshot> snapshots;
};

/// Columns iter,d_loss,g_loss,gp,grad_norm.
void write_report_csv(std::ostream & out, const GanTrainReport & report);

struct LatentGanResult
{
  LatentGanModel model;
  GanTrainReport report;
};

/// Alternating updates. StandardGan: one discriminator step per generator step
/// with the non-saturating log loss. WganGp: n_critic critic steps of
/// D(fake) - D(real) + lambda * penalty per generator step. Throws
/// ValidationError on empty latents and NumericError on a non-finite loss.
LatentGanResult train_latent_gan(const ae::LatentDataset & ld, const LatentGanConfig & cfg,
                                 const std::string & ae_fingerprint = {});

/// n raw latents (rows); deterministic given the rng state.
std::vector<ae::LatentVector> sample_latent(const LatentGanModel & m, std::size_t n, Rng & rng);

/// sample_latent -> estimate_length -> decode -> denormalize. Throws
/// ValidationError when the three models disagree on the latent space.
Dataset generate_trajectories(
  const LatentGanModel & m, const ae::AeModel & ae, const ae::LenModel & lm, std::size_t n, Rng & rng,
  const std::string & id_prefix = "gen");

/// Decodes given latents with estimated lengths; shared by the pipeline above.
Dataset decode_latents(
  const std::vector<ae::LatentVector> & latents, const ae::AeModel & ae, const ae::LenModel & lm,
  const std::string & id_prefix);

void store(nn::Checkpoint & ckpt, const LatentGanModel & m);
LatentGanModel load_latent_gan(const nn::Checkpoint & ckpt);

}  // namespace scenforge::gen
