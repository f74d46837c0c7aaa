#include "scenforge/gen/latent_gan.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

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

nn::FeedForward make_net(
  const std::string & prefix, const LatentGanConfig & cfg, int in, int out, nn::Activation hidden, Rng & rng)
{
  if (cfg.net == NetKind::ResNet) {
    return nn::ResNetParams::create(
      prefix, in, cfg.resnet_width, cfg.resnet_blocks, out, hidden, nn::Activation::Linear, rng);
  }
  std::vector<int> widths{in};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(out);
  return nn::MlpParams::create(prefix, widths, hidden, nn::Activation::Linear, rng);
}

Critic critic_of(const LatentGanModel & m)
{
  return [&m](Tape & tape, Var x) { return nn::forward_mlp(m.discriminator, x, tape); };
}

void check_finite(double v, const char * what, int iter)
{
  if (!std::isfinite(v)) {
    throw NumericError(fmt::format("latent GAN {} became non-finite at iteration {}", what, iter));
  }
}

Matrix standardized_rows(const ae::LatentDataset & ld, const std::vector<std::size_t> & rows, const LatentGanModel & m)
{
  Matrix x(static_cast<Eigen::Index>(rows.size()), m.latent_size);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    x.row(static_cast<Eigen::Index>(r)) =
      (ld.latents[rows[r]].transpose() - m.latent_mean).cwiseQuotient(m.latent_std);
  }
  return x;
}

std::string join_ints(const std::vector<int> & v)
{
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<int> split_ints(const std::string & s)
{
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const auto comma = s.find(',', pos);
    out.push_back(std::stoi(s.substr(pos, comma - pos)));
    pos = comma == std::string::npos ? s.size() : comma + 1;
  }
  return out;
}

}  // namespace

std::string to_string(GanMode mode)
{
  return mode == GanMode::WganGp ? "wgan-gp" : "gan";
}

std::string to_string(NetKind kind)
{
  return kind == NetKind::ResNet ? "resnet" : "mlp";
}

GanMode parse_gan_mode(const std::string & s)
{
  if (s == "gan") return GanMode::StandardGan;
  if (s == "wgan-gp" || s == "wgangp") return GanMode::WganGp;
  throw ConfigError("unknown GAN mode '" + s + "' (expected gan or wgan-gp)");
}

NetKind parse_net_kind(const std::string & s)
{
  if (s == "mlp") return NetKind::Mlp;
  if (s == "resnet") return NetKind::ResNet;
  throw ConfigError("unknown network kind '" + s + "' (expected mlp or resnet)");
}

Var fd_input_gradient(Tape & tape, const Critic & critic, const Matrix & x, double h)
{
  if (!(h > 0.0)) {
    throw ValidationError("finite-difference spacing must be positive");
  }
  const Eigen::Index b = x.rows();
  const Eigen::Index d = x.cols();
  // Row block 2k holds x + h e_k, block 2k + 1 holds x - h e_k.
  Matrix probes(2 * d * b, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    Matrix plus = x;
    Matrix minus = x;
    plus.col(k).array() += h;
    minus.col(k).array() -= h;
    probes.middleRows(2 * k * b, b) = plus;
    probes.middleRows((2 * k + 1) * b, b) = minus;
  }
  const Var scores = critic(tape, tape.constant(std::move(probes)));
  std::vector<Var> cols;
  cols.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index k = 0; k < d; ++k) {
    cols.push_back(nn::scale(
      nn::sub(nn::slice_rows(scores, 2 * k * b, b), nn::slice_rows(scores, (2 * k + 1) * b, b)), 0.5 / h));
  }
  return nn::concat_cols(cols);
}

Var gradient_penalty(
  Tape & tape, const Critic & critic, const Matrix & x_real, const Matrix & x_fake, Rng & rng, double h,
  GpSample * info)
{
  if (!(h > 0.0)) {
    throw ValidationError("gradient penalty spacing must be positive");
  }
  if (x_real.rows() != x_fake.rows() || x_real.cols() != x_fake.cols() || x_real.rows() == 0) {
    throw ValidationError("gradient penalty needs equally sized non-empty batches");
  }
  Matrix mixed(x_real.rows(), x_real.cols());
  for (Eigen::Index i = 0; i < x_real.rows(); ++i) {
    const double e = rng.uniform();
    mixed.row(i) = e * x_real.row(i) + (1.0 - e) * x_fake.row(i);
  }
  const Var g = fd_input_gradient(tape, critic, mixed, h);
  const Var norms = nn::sqrt(nn::add_scalar(nn::row_sum(nn::square(g)), 1e-12));
  const Var penalty = nn::mean(nn::square(nn::add_scalar(norms, -1.0)));
  if (info) {
    info->penalty = penalty.scalar();
    info->mean_grad_norm = norms.value().mean();
  }
  return penalty;
}

LatentGanModel LatentGanModel::create(const LatentGanConfig & cfg, int latent_size, Rng & rng)
{
  if (cfg.noise_dim < 1 || latent_size < 1) {
    throw ConfigError("latent GAN needs positive noise and latent sizes");
  }
  LatentGanModel m;
  m.mode = cfg.mode;
  m.net_kind = cfg.net;
  m.noise_dim = cfg.noise_dim;
  m.latent_size = latent_size;
  m.lambda_gp = cfg.lambda_gp;
  Rng g_rng = rng.split("generator");
  Rng d_rng = rng.split("discriminator");
  m.generator = make_net("lgan.gen", cfg, cfg.noise_dim, latent_size, nn::Activation::LeakyRelu, g_rng);
  m.discriminator = make_net("lgan.disc", cfg, latent_size, 1, nn::Activation::LeakyRelu, d_rng);
  m.latent_mean = Eigen::RowVectorXd::Zero(latent_size);
  m.latent_std = Eigen::RowVectorXd::Ones(latent_size);
  return m;
}

Eigen::VectorXd LatentGanModel::discriminate(const Eigen::MatrixXd & latents) const
{
  Tape tape;
  Matrix x = (latents.rowwise() - latent_mean).array().rowwise() / latent_std.array();
  Var out = nn::forward_mlp(discriminator, tape.constant(std::move(x)), tape);
  if (mode == GanMode::StandardGan) out = nn::sigmoid(out);
  return out.value().col(0);
}

void write_report_csv(std::ostream & out, const GanTrainReport & report)
{
  out << "iter,d_loss,g_loss,gp,grad_norm\n";
  for (const auto & r : report.records) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.iter, r.d_loss, r.g_loss, r.gp, r.grad_norm);
  }
}

LatentGanResult train_latent_gan(const ae::LatentDataset & ld, const LatentGanConfig & cfg,
                                 const std::string & ae_fingerprint)
{
  if (ld.latents.empty()) {
    throw ValidationError("latent GAN needs at least one latent vector");
  }
  if (cfg.batch_size == 0 || cfg.n_critic < 1 || cfg.iterations < 0) {
    throw ConfigError("latent GAN batch_size and n_critic must be positive");
  }
  const int dim = static_cast<int>(ld.latents.front().size());
  const Rng root(cfg.seed);
  Rng init_rng = root.split("init");
  LatentGanResult res{LatentGanModel::create(cfg, dim, init_rng), {}};
  LatentGanModel & m = res.model;
  m.ae_fingerprint = ae_fingerprint;

  const auto n = static_cast<Eigen::Index>(ld.latents.size());
  Matrix all(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) all.row(i) = ld.latents[static_cast<std::size_t>(i)].transpose();
  m.latent_mean = all.colwise().mean();
  m.latent_std = ((all.rowwise() - m.latent_mean).array().square().colwise().mean()).sqrt().max(1e-8);

  const auto g_params = m.generator_parameters();
  const auto d_params = m.discriminator_parameters();
  nn::AdamState g_adam(g_params, {cfg.lr_g, cfg.beta1, cfg.beta2});
  nn::AdamState d_adam(d_params, {cfg.lr_d, cfg.beta1, cfg.beta2});
  const Critic critic = critic_of(m);
  const auto batch = static_cast<Eigen::Index>(cfg.batch_size);
  const int d_steps = m.mode == GanMode::WganGp ? cfg.n_critic : 1;
  Rng snapshot_noise = root.split("snapshot");
  const Matrix snapshot_z = gaussian(static_cast<Eigen::Index>(cfg.snapshot_size), m.noise_dim, snapshot_noise);

  for (int it = 0; it < cfg.iterations; ++it) {
    Rng rng = root.split("iter").split(static_cast<std::uint64_t>(it));
    GanIterRecord rec;
    rec.iter = it;
    for (int s = 0; s < d_steps; ++s) {
      std::vector<std::size_t> rows(cfg.batch_size);
      for (auto & r : rows) r = rng.index(ld.latents.size());
      const Matrix real = standardized_rows(ld, rows, m);
      Matrix fake;
      {
        Tape gt;
        fake = nn::forward_mlp(m.generator, gt.constant(gaussian(batch, m.noise_dim, rng)), gt).value();
      }
      Tape tape;
      nn::zero_grad(d_params);
      const Var d_real = critic(tape, tape.constant(real));
      const Var d_fake = critic(tape, tape.constant(fake));
      Var loss;
      if (m.mode == GanMode::WganGp) {
        GpSample gp;
        const Var pen = gradient_penalty(tape, critic, real, fake, rng, cfg.gp_h, &gp);
        loss = nn::add(nn::sub(nn::mean(d_fake), nn::mean(d_real)), nn::scale(pen, cfg.lambda_gp));
        rec.gp = gp.penalty;
        rec.grad_norm = gp.mean_grad_norm;
      } else {
        loss = nn::add(nn::bce_with_logits(d_real, 1.0), nn::bce_with_logits(d_fake, 0.0));
      }
      check_finite(loss.scalar(), "discriminator loss", it);
      tape.backward(loss);
      nn::adam_step(d_adam, d_params);
      rec.d_loss = loss.scalar();
    }
    Tape tape;
    nn::zero_grad(g_params);
    const Var fake = nn::forward_mlp(m.generator, tape.constant(gaussian(batch, m.noise_dim, rng)), tape);
    const Var score = critic(tape, fake);
    const Var g_loss =
      m.mode == GanMode::WganGp ? nn::scale(nn::mean(score), -1.0) : nn::bce_with_logits(score, 1.0);
    check_finite(g_loss.scalar(), "generator loss", it);
    tape.backward(g_loss);
    nn::zero_grad(d_params);
    nn::adam_step(g_adam, g_params);
    rec.g_loss = g_loss.scalar();
    res.report.records.push_back(rec);

    if (cfg.snapshot_every > 0 && (it + 1) % cfg.snapshot_every == 0) {
      Tape st;
      Matrix z = nn::forward_mlp(m.generator, st.constant(snapshot_z), st).value();
      z = (z.array().rowwise() * m.latent_std.array()).rowwise() + m.latent_mean.array();
      res.report.snapshots.push_back({it + 1, std::move(z)});
    }
  }
  return res;
}

std::vector<ae::LatentVector> sample_latent(const LatentGanModel & m, std::size_t n, Rng & rng)
{
  std::vector<ae::LatentVector> out;
  if (n == 0) return out;
  Tape tape;
  const Matrix z = gaussian(static_cast<Eigen::Index>(n), m.noise_dim, rng);
  const Matrix x = nn::forward_mlp(m.generator, tape.constant(z), tape).value();
  out.reserve(n);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out.emplace_back((x.row(i).array() * m.latent_std.array() + m.latent_mean.array()).transpose());
  }
  return out;
}

Dataset decode_latents(
  const std::vector<ae::LatentVector> & latents, const ae::AeModel & ae, const ae::LenModel & lm,
  const std::string & id_prefix)
{
  Dataset out;
  out.trajectories.reserve(latents.size());
  for (std::size_t i = 0; i < latents.size(); ++i) {
    const auto length = ae::estimate_length(lm, latents[i]);
    Trajectory t = ae::decode(ae, latents[i], length);
    t.id = id_prefix + "-" + std::to_string(i);
    out.trajectories.push_back(denormalize(t, ae.norm));
  }
  return out;
}

Dataset generate_trajectories(
  const LatentGanModel & m, const ae::AeModel & ae, const ae::LenModel & lm, std::size_t n, Rng & rng,
  const std::string & id_prefix)
{
  const std::string fp = ae.fingerprint();
  if (m.latent_size != ae.latent_size || lm.input_mean.size() != ae.latent_size) {
    throw ValidationError(fmt::format(
      "latent size mismatch: generator {}, autoencoder {}, length estimator {}", m.latent_size, ae.latent_size,
      lm.input_mean.size()));
  }
  if ((!m.ae_fingerprint.empty() && m.ae_fingerprint != fp) || (!lm.ae_fingerprint.empty() && lm.ae_fingerprint != fp)) {
    throw ValidationError("generator or length estimator was trained against a different autoencoder");
  }
  return decode_latents(sample_latent(m, n, rng), ae, lm, id_prefix);
}

void store(nn::Checkpoint & ckpt, const LatentGanModel & m)
{
  nn::store_parameters(ckpt, m.generator_parameters());
  nn::store_parameters(ckpt, m.discriminator_parameters());
  ckpt.put("lgan.latent_mean", m.latent_mean);
  ckpt.put("lgan.latent_std", m.latent_std);
  ckpt.metadata["lgan.mode"] = to_string(m.mode);
  ckpt.metadata["lgan.net"] = to_string(m.net_kind);
  ckpt.metadata["lgan.ae_fingerprint"] = m.ae_fingerprint;
  ckpt.set_meta("lgan.noise_dim", m.noise_dim);
  ckpt.set_meta("lgan.latent_size", m.latent_size);
  ckpt.set_meta("lgan.lambda_gp", m.lambda_gp);
  if (const auto * mlp = std::get_if<nn::MlpParams>(&m.generator)) {
    std::vector<int> hidden;
    for (std::size_t i = 1; i < mlp->layers.size(); ++i) hidden.push_back(mlp->layers[i].in_width());
    ckpt.metadata["lgan.hidden"] = join_ints(hidden);
  } else {
    const auto & res = std::get<nn::ResNetParams>(m.generator);
    ckpt.set_meta("lgan.resnet_width", res.input.out_width());
    ckpt.set_meta("lgan.resnet_blocks", static_cast<double>(res.blocks.size()));
  }
}

LatentGanModel load_latent_gan(const nn::Checkpoint & ckpt)
{
  LatentGanConfig cfg;
  cfg.mode = parse_gan_mode(ckpt.meta("lgan.mode"));
  cfg.net = parse_net_kind(ckpt.meta("lgan.net"));
  cfg.noise_dim = static_cast<int>(ckpt.meta_int("lgan.noise_dim"));
  cfg.lambda_gp = ckpt.meta_double("lgan.lambda_gp");
  if (cfg.net == NetKind::Mlp) {
    cfg.hidden = split_ints(ckpt.meta("lgan.hidden"));
  } else {
    cfg.resnet_width = static_cast<int>(ckpt.meta_int("lgan.resnet_width"));
    cfg.resnet_blocks = static_cast<int>(ckpt.meta_int("lgan.resnet_blocks"));
  }
  Rng rng(0);
  LatentGanModel m = LatentGanModel::create(cfg, static_cast<int>(ckpt.meta_int("lgan.latent_size")), rng);
  nn::restore_parameters(ckpt, m.generator_parameters());
  nn::restore_parameters(ckpt, m.discriminator_parameters());
  m.latent_mean = ckpt.get("lgan.latent_mean");
  m.latent_std = ckpt.get("lgan.latent_std");
  m.ae_fingerprint = ckpt.meta("lgan.ae_fingerprint");
  return m;
}

}  // namespace scenforge::gen
