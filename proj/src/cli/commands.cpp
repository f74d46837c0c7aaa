#include "scenforge/cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "scenforge/ae/length_estimator.hpp"
#include "scenforge/analysis/clustering.hpp"
#include "scenforge/analysis/outliers.hpp"
#include "scenforge/analysis/reduce.hpp"
#include "scenforge/cli/svg.hpp"
#include "scenforge/errors.hpp"
#include "scenforge/gen/latent_gan.hpp"
#include "scenforge/gen/rcgan.hpp"
#include "scenforge/metrics/set_metrics.hpp"
#include "scenforge/synth.hpp"

namespace scenforge::cli
{
namespace fs = std::filesystem;

namespace
{

std::ofstream open_out(const fs::path & path)
{
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  return out;
}

void prepare_out(const RunConfig & cfg, const std::string & command)
{
  fs::create_directories(cfg.out_dir());
  auto out = open_out(cfg.out_dir() / fmt::format("config.{}.txt", command));
  cfg.write(out);
}

fs::path in_out(const RunConfig & cfg, const std::string & key)
{
  const fs::path p = cfg.str(key);
  return p.is_absolute() ? p : cfg.out_dir() / p;
}

LengthRange length_range(const RunConfig & cfg)
{
  LengthRange r{static_cast<int>(cfg.integer("length.min")), static_cast<int>(cfg.integer("length.max"))};
  if (r.min < 1 || r.min > r.max) throw ConfigError("length.min must be >= 1 and <= length.max");
  return r;
}

fs::path require(const fs::path & path, const std::string & what, const std::string & hint)
{
  if (!fs::exists(path)) {
    throw MissingArtifactError(fmt::format("{} '{}' not found; {}", what, path.string(), hint));
  }
  return path;
}

Dataset load_real(const RunConfig & cfg)
{
  const auto path = require(cfg.path_or("data.real", "dataset.jsonl"), "real dataset", "run `synth` or set data.real");
  LoadOptions opts;
  opts.length_range = length_range(cfg);
  return load_dataset(path, opts);
}

ae::AeModel load_ae(const RunConfig & cfg)
{
  const auto path = require(cfg.path_or("checkpoint.ae", "ae.sfck"), "autoencoder checkpoint", "run `train ae` first");
  return ae::load_autoencoder(nn::load_checkpoint(path));
}

ae::LenModel load_len(const RunConfig & cfg)
{
  const auto path =
    require(cfg.path_or("checkpoint.len", "len.sfck"), "length estimator checkpoint", "run `train len` first");
  return ae::load_length_estimator(nn::load_checkpoint(path));
}

void check_len_matches(const ae::LenModel & lm, const ae::AeModel & m)
{
  if (!lm.ae_fingerprint.empty() && lm.ae_fingerprint != m.fingerprint()) {
    throw ValidationError("length estimator was trained against a different autoencoder; rerun `train len`");
  }
}

void save(const nn::Checkpoint & ckpt, const fs::path & path)
{
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  nn::save_checkpoint(ckpt, path);
  std::cout << "wrote " << path.string() << " (" << nn::checkpoint_hash(ckpt) << ")\n";
}

std::string fmt_g(double v)
{
  return fmt::format("{:.17g}", v);
}

void train_ae(const RunConfig & cfg)
{
  const Dataset raw = load_real(cfg);
  const NormStats stats = fit_normalization(raw);
  const Dataset ds = normalize(raw, stats);
  ae::AeConfig ac;
  ac.latent_size = static_cast<int>(cfg.integer("ae.latent"));
  ac.layers = static_cast<int>(cfg.integer("ae.layers"));
  ac.epochs = static_cast<int>(cfg.integer("ae.epochs"));
  ac.lr = cfg.real("ae.lr");
  ac.seed = cfg.u64("seed");
  ac.val_fraction = cfg.real("ae.val_fraction");
  ac.batch_size = static_cast<std::size_t>(cfg.integer("ae.batch"));
  ac.clip_norm = cfg.real("ae.clip");
  ac.length_range = length_range(cfg);
  const auto hidden = cfg.int_list("ae.hidden");
  if (hidden.empty()) throw ConfigError("ae.hidden needs at least one size");

  if (hidden.size() == 1) {
    ac.hidden_size = hidden.front();
    const auto res = ae::train_autoencoder(ds, ac);
    auto hist = open_out(cfg.out_dir() / "ae_history.csv");
    hist << "epoch,train_loss,val_loss\n";
    for (const auto & r : res.history) hist << r.epoch << "," << fmt_g(r.train_loss) << "," << fmt_g(r.val_loss) << "\n";
    nn::Checkpoint ckpt;
    ae::store(ckpt, res.model);
    save(ckpt, cfg.path_or("checkpoint.ae", "ae.sfck"));
    return;
  }
  auto sweep = open_out(cfg.out_dir() / "ae_sweep.csv");
  auto summary = open_out(cfg.out_dir() / "ae_sweep_summary.csv");
  sweep << "hidden,epoch,train_loss,val_loss\n";
  summary << "hidden,best_val_loss,final_val_loss\n";
  for (int h : hidden) {
    ac.hidden_size = h;
    const auto res = ae::train_autoencoder(ds, ac);
    double best = std::numeric_limits<double>::infinity();
    for (const auto & r : res.history) {
      sweep << h << "," << r.epoch << "," << fmt_g(r.train_loss) << "," << fmt_g(r.val_loss) << "\n";
      best = std::min(best, r.val_loss);
    }
    const double final_val = res.history.empty() ? 0.0 : res.history.back().val_loss;
    summary << h << "," << fmt_g(res.history.empty() ? 0.0 : best) << "," << fmt_g(final_val) << "\n";
    nn::Checkpoint ckpt;
    ae::store(ckpt, res.model);
    save(ckpt, cfg.out_dir() / fmt::format("ae_hs{}.sfck", h));
  }
}

void train_len(const RunConfig & cfg)
{
  const ae::AeModel m = load_ae(cfg);
  const Dataset ds = normalize(load_real(cfg), m.norm);
  const auto ld = ae::encode_dataset(m, ds);
  ae::LenConfig lc;
  lc.hidden = cfg.int_list("len.hidden");
  lc.epochs = static_cast<int>(cfg.integer("len.epochs"));
  lc.lr = cfg.real("len.lr");
  lc.batch_size = static_cast<std::size_t>(cfg.integer("len.batch"));
  lc.holdout_fraction = cfg.real("len.holdout");
  lc.seed = cfg.u64("seed");
  const auto res = ae::train_length_estimator(ld, m.length_range, lc, m.fingerprint());
  auto hist = open_out(cfg.out_dir() / "len_history.csv");
  hist << "epoch,train_loss\n";
  for (std::size_t e = 0; e < res.train_loss.size(); ++e) hist << e << "," << fmt_g(res.train_loss[e]) << "\n";
  auto rep = open_out(cfg.out_dir() / "len_report.txt");
  rep << "holdout_rows = " << res.holdout_rows.size() << "\n";
  rep << "holdout_exact = " << fmt_g(res.holdout_exact) << "\n";
  rep << "holdout_within2 = " << fmt_g(res.holdout_within2) << "\n";
  std::cout << fmt::format(
    "length estimator: {:.1f}% exact, {:.1f}% within 2 frames on {} held-out latents\n", 100.0 * res.holdout_exact,
    100.0 * res.holdout_within2, res.holdout_rows.size());
  nn::Checkpoint ckpt;
  ae::store(ckpt, res.model);
  save(ckpt, cfg.path_or("checkpoint.len", "len.sfck"));
}

void train_lgan(const RunConfig & cfg)
{
  const ae::AeModel m = load_ae(cfg);
  const ae::LenModel lm = load_len(cfg);
  check_len_matches(lm, m);
  const Dataset ds = normalize(load_real(cfg), m.norm);
  const auto ld = ae::encode_dataset(m, ds);
  gen::LatentGanConfig gc;
  gc.mode = gen::parse_gan_mode(cfg.str("lgan.mode"));
  gc.net = gen::parse_net_kind(cfg.str("lgan.net"));
  gc.noise_dim = static_cast<int>(cfg.integer("lgan.noise"));
  gc.hidden = cfg.int_list("lgan.hidden");
  gc.resnet_width = static_cast<int>(cfg.integer("lgan.resnet_width"));
  gc.resnet_blocks = static_cast<int>(cfg.integer("lgan.resnet_blocks"));
  gc.iterations = static_cast<int>(cfg.integer("lgan.iterations"));
  gc.batch_size = static_cast<std::size_t>(cfg.integer("lgan.batch"));
  gc.n_critic = static_cast<int>(cfg.integer("lgan.n_critic"));
  gc.lambda_gp = cfg.real("lgan.lambda");
  gc.gp_h = cfg.real("lgan.gp_h");
  gc.lr_g = cfg.real("lgan.lr_g");
  gc.lr_d = cfg.real("lgan.lr_d");
  gc.beta1 = cfg.real("lgan.beta1");
  gc.beta2 = cfg.real("lgan.beta2");
  gc.snapshot_every = static_cast<int>(cfg.integer("lgan.snapshot_every"));
  gc.seed = cfg.u64("seed");
  const auto res = gen::train_latent_gan(ld, gc, m.fingerprint());
  auto rep = open_out(cfg.out_dir() / "lgan_report.csv");
  gen::write_report_csv(rep, res.report);
  nn::Checkpoint ckpt;
  gen::store(ckpt, res.model);
  save(ckpt, cfg.path_or("checkpoint.lgan", "lgan.sfck"));
}

void train_rcgan(const RunConfig & cfg)
{
  const Dataset raw = load_real(cfg);
  const Dataset ds = normalize(raw, fit_normalization(raw));
  gen::RcganConfig rc;
  rc.noise_dim = static_cast<int>(cfg.integer("rcgan.noise"));
  rc.hidden_size = static_cast<int>(cfg.integer("rcgan.hidden"));
  rc.generator_layers = static_cast<int>(cfg.integer("rcgan.layers"));
  rc.iterations = static_cast<int>(cfg.integer("rcgan.iterations"));
  rc.batch_size = static_cast<std::size_t>(cfg.integer("rcgan.batch"));
  rc.lr_g = cfg.real("rcgan.lr_g");
  rc.lr_d = cfg.real("rcgan.lr_d");
  rc.beta1 = cfg.real("rcgan.beta1");
  rc.beta2 = cfg.real("rcgan.beta2");
  rc.length_range = length_range(cfg);
  rc.seed = cfg.u64("seed");
  const auto res = gen::train_rcgan(ds, rc);
  auto rep = open_out(cfg.out_dir() / "rcgan_report.csv");
  gen::write_report_csv(rep, res.report);
  nn::Checkpoint ckpt;
  gen::store(ckpt, res.model);
  save(ckpt, cfg.path_or("checkpoint.rcgan", "rcgan.sfck"));
}

std::vector<std::pair<std::size_t, std::size_t>> parse_length_counts(const RunConfig & cfg)
{
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto & item : cfg.str_list("sample.lengths")) {
    const auto colon = item.find(':');
    try {
      if (colon == std::string::npos) throw std::invalid_argument(item);
      out.emplace_back(std::stoul(item.substr(0, colon)), std::stoul(item.substr(colon + 1)));
    } catch (const std::exception &) {
      throw ConfigError(fmt::format("sample.lengths entry '{}' is not LENGTH:COUNT", item));
    }
  }
  return out;
}

std::string file_hash(const fs::path & p)
{
  std::ifstream in(p, std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fmt::format("{:016x}", fnv1a64(bytes));
}

}  // namespace

void cmd_synth(const RunConfig & cfg)
{
  prepare_out(cfg, "synth");
  SynthParams p;
  p.lane_offset_m = cfg.real("synth.lane_offset");
  p.lon_range_m = {cfg.real("synth.lon_min"), cfg.real("synth.lon_max")};
  p.accel_range_mps2 = {cfg.real("synth.accel_min"), cfg.real("synth.accel_max")};
  p.noise_std_m = cfg.real("synth.noise");
  p.length_range = length_range(cfg);
  p.decel_fraction = cfg.real("synth.decel_fraction");
  try {
    p.validate();
  } catch (const ValidationError & e) {
    throw ConfigError(e.what());
  }
  ClassCounts counts;
  counts.cutin = static_cast<std::size_t>(cfg.integer("synth.cutin"));
  counts.driveby_left = static_cast<std::size_t>(cfg.integer("synth.driveby_left"));
  counts.driveby_right = static_cast<std::size_t>(cfg.integer("synth.driveby_right"));
  const Dataset ds = synth_dataset(counts, p, cfg.u64("seed"));
  std::map<ScenarioLabel, std::size_t> agree;
  for (const auto & t : ds.trajectories) {
    if (t.label && rule_label(t, p.lane_offset_m) == *t.label) ++agree[*t.label];
  }
  const fs::path path = in_out(cfg, "synth.output");
  save_dataset(ds, path);
  std::cout << fmt::format(
    "wrote {} trajectories to {} (rule labeler agrees: cutin {}/{}, driveby_left {}/{}, driveby_right {}/{})\n",
    ds.size(), path.string(), agree[ScenarioLabel::CutIn], counts.cutin, agree[ScenarioLabel::DriveByLeft],
    counts.driveby_left, agree[ScenarioLabel::DriveByRight], counts.driveby_right);
}

void cmd_train(const RunConfig & cfg, const std::string & which)
{
  prepare_out(cfg, "train-" + which);
  if (which == "ae") return train_ae(cfg);
  if (which == "len") return train_len(cfg);
  if (which == "lgan") return train_lgan(cfg);
  if (which == "rcgan") return train_rcgan(cfg);
  throw ConfigError("unknown training stage '" + which + "' (expected ae, len, lgan or rcgan)");
}

void cmd_sample(const RunConfig & cfg)
{
  prepare_out(cfg, "sample");
  Rng rng = Rng(cfg.u64("seed")).split("sample");
  const std::string source = cfg.str("sample.source");
  Dataset out;
  std::map<std::string, std::string> provenance{{"source", source}, {"seed", cfg.str("seed")}};
  if (source == "latent") {
    const auto ae_path = cfg.path_or("checkpoint.ae", "ae.sfck");
    const auto len_path = cfg.path_or("checkpoint.len", "len.sfck");
    const auto gan_path =
      require(cfg.path_or("checkpoint.lgan", "lgan.sfck"), "latent GAN checkpoint", "run `train lgan` first");
    const ae::AeModel m = load_ae(cfg);
    const ae::LenModel lm = load_len(cfg);
    const gen::LatentGanModel g = gen::load_latent_gan(nn::load_checkpoint(gan_path));
    out = gen::generate_trajectories(g, m, lm, static_cast<std::size_t>(cfg.integer("sample.n")), rng, "lgan");
    provenance["checkpoint.ae"] = file_hash(ae_path);
    provenance["checkpoint.len"] = file_hash(len_path);
    provenance["checkpoint.lgan"] = file_hash(gan_path);
    provenance["ae_fingerprint"] = m.fingerprint();
  } else if (source == "rcgan") {
    const auto path =
      require(cfg.path_or("checkpoint.rcgan", "rcgan.sfck"), "RC-GAN checkpoint", "run `train rcgan` first");
    const gen::RcganModel g = gen::load_rcgan(nn::load_checkpoint(path));
    for (const auto & [length, count] : parse_length_counts(cfg)) {
      Rng per_length = rng.split(static_cast<std::uint64_t>(length));
      auto part = gen::sample_rcgan(g, length, count, per_length, "rcgan");
      out.trajectories.insert(out.trajectories.end(), part.trajectories.begin(), part.trajectories.end());
    }
    provenance["checkpoint.rcgan"] = file_hash(path);
    provenance["lengths"] = cfg.str("sample.lengths");
  } else {
    throw ConfigError("sample.source must be latent or rcgan, got '" + source + "'");
  }
  const fs::path path = in_out(cfg, "sample.output");
  save_dataset(out, path);
  provenance["count"] = std::to_string(out.size());
  provenance["dataset_hash"] = file_hash(path);
  auto side = open_out(fs::path(path).replace_extension(".provenance.txt"));
  for (const auto & [k, v] : provenance) side << k << " = " << v << "\n";
  std::cout << fmt::format("wrote {} samples to {}\n", out.size(), path.string());
}

void cmd_eval(const RunConfig & cfg)
{
  prepare_out(cfg, "eval");
  const Dataset real = load_real(cfg);
  metrics::EvalConfig ec;
  ec.runs = static_cast<int>(cfg.integer("eval.runs"));
  ec.m_over_n = static_cast<int>(cfg.integer("eval.m_over_n"));
  ec.n = static_cast<std::size_t>(cfg.integer("eval.n"));
  ec.truncate_fraction = cfg.real("eval.truncate");
  ec.seed = cfg.u64("seed");
  ec.threads = static_cast<unsigned>(cfg.integer("threads"));

  std::vector<std::pair<std::string, metrics::EvalSummary>> rows;
  if (cfg.flag("eval.baseline")) rows.emplace_back("real (baseline)", metrics::baseline_split_eval(real, ec));
  LoadOptions opts;
  opts.length_range = length_range(cfg);
  for (const auto & item : cfg.str_list("data.generated")) {
    const fs::path p = require(item, "generated dataset", "run `sample` first or fix data.generated");
    rows.emplace_back(p.stem().string(), metrics::evaluate_sets(load_dataset(p, opts), real, ec));
  }
  if (rows.empty()) throw ConfigError("nothing to evaluate: set data.generated or eval.baseline = true");

  auto runs = open_out(cfg.out_dir() / "eval_runs.csv");
  auto summary = open_out(cfg.out_dir() / "eval_summary.csv");
  auto matched = open_out(cfg.out_dir() / "matched.csv");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    metrics::write_runs_csv(runs, rows[i].first, rows[i].second, i == 0);
    metrics::write_summary_csv(summary, rows[i].first, rows[i].second, i == 0);
    metrics::write_matched_csv(matched, rows[i].first, rows[i].second, i == 0);
  }
  auto table = open_out(cfg.out_dir() / "eval_table.txt");
  metrics::write_table(table, rows, ec.truncate_fraction);
  metrics::write_table(std::cout, rows, ec.truncate_fraction);
}

void cmd_cluster(const RunConfig & cfg)
{
  prepare_out(cfg, "cluster");
  const ae::AeModel m = load_ae(cfg);
  const Dataset ds = normalize(load_real(cfg), m.norm);
  std::vector<ScenarioLabel> labels;
  for (const auto & t : ds.trajectories) labels.push_back(t.label.value_or(ScenarioLabel::Unknown));

  std::vector<std::size_t> rows(ds.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  if (cfg.flag("cluster.balance")) {
    Rng rng = Rng(cfg.u64("seed")).split("balance");
    rows = analysis::balance_classes(labels, rng);
  }
  const auto latents = ae::encode_dataset(m, ds).latents;
  std::vector<Eigen::VectorXd> picked;
  std::vector<std::string> ids;
  std::vector<ScenarioLabel> truth;
  std::map<std::size_t, int> seen;
  for (auto r : rows) {
    picked.push_back(latents[r]);
    const int copy = seen[r]++;
    ids.push_back(copy == 0 ? ds.trajectories[r].id : fmt::format("{}~{}", ds.trajectories[r].id, copy));
    truth.push_back(labels[r]);
  }
  const Eigen::MatrixXd x = analysis::stack_rows(picked);

  const auto method = analysis::parse_reduce_method(cfg.str("cluster.method"));
  const int k = static_cast<int>(cfg.integer("cluster.k"));
  Eigen::MatrixXd emb;
  if (method == analysis::ReduceMethod::Pca) {
    const auto r = analysis::pca_fit_transform(x, k);
    emb = r.embedding.points;
    auto ev = open_out(cfg.out_dir() / "explained_variance.csv");
    ev << "component,fraction\n";
    for (std::size_t i = 0; i < r.explained_variance.size(); ++i) ev << i << "," << fmt_g(r.explained_variance[i]) << "\n";
  } else if (method == analysis::ReduceMethod::Svd) {
    emb = analysis::svd_transform(x, k).embedding.points;
  } else {
    analysis::TsneConfig tc;
    tc.perplexity = cfg.real("cluster.perplexity");
    tc.iterations = static_cast<int>(cfg.integer("cluster.iterations"));
    tc.learning_rate = cfg.real("cluster.lr");
    tc.seed = cfg.u64("seed");
    const auto r = analysis::tsne_embed(x, tc);
    emb = r.embedding.points;
    auto kl = open_out(cfg.out_dir() / "tsne_kl.csv");
    kl << "iter,kl\n";
    for (std::size_t i = 0; i < r.kl_trace.size(); ++i) kl << i << "," << fmt_g(r.kl_trace[i]) << "\n";
  }

  analysis::SweepConfig sc;
  sc.eps = cfg.real_list("cluster.eps");
  sc.min_neighbors = cfg.int_list("cluster.min_neighbors");
  const auto sweep = analysis::dbscan_sweep(emb, truth, sc);
  auto sweep_out = open_out(cfg.out_dir() / "sweep.csv");
  analysis::write_sweep_csv(sweep_out, sweep);
  std::size_t chosen = 0;
  if (sweep.best >= 0) {
    chosen = static_cast<std::size_t>(sweep.best);
  } else {
    for (std::size_t i = 1; i < sweep.rows.size(); ++i) {
      if (sweep.rows[i].purity > sweep.rows[chosen].purity) chosen = i;
    }
  }
  const auto & row = sweep.rows.at(chosen);
  const auto clusters = analysis::dbscan(emb, row.eps, row.min_neighbors);
  const auto consistency = analysis::cluster_consistency(clusters.labels, truth);
  {
    auto emb_out = open_out(cfg.out_dir() / "embedding.csv");
    analysis::write_embedding_csv(emb_out, ids, emb, clusters.labels, truth);
  }
  auto cont = open_out(cfg.out_dir() / "contingency.csv");
  analysis::write_contingency_csv(cont, consistency);
  const std::string report = fmt::format(
    "method = {}\npoints = {}\neligible = {}\neps = {:.17g}\nmin_neighbors = {}\nclusters = {}\nnoise = {}\n"
    "purity = {:.17g}\nrefinement = {}\n",
    analysis::to_string(method), emb.rows(), sweep.best >= 0 ? "true" : "false", row.eps, row.min_neighbors,
    clusters.cluster_count(), clusters.noise_count(), consistency.purity, consistency.refinement ? "true" : "false");
  auto rep = open_out(cfg.out_dir() / "cluster_report.txt");
  rep << report;
  std::cout << report;
  render_plot(PlotKind::ScatterEmbedding, cfg.out_dir() / "embedding.csv", cfg.out_dir() / "embedding.svg",
              {"latent embedding (" + analysis::to_string(method) + ")", "", ""});
}

void cmd_outliers(const RunConfig & cfg)
{
  prepare_out(cfg, "outliers");
  const ae::AeModel m = load_ae(cfg);
  const Dataset raw = load_real(cfg);
  const Dataset ds = normalize(raw, m.norm);
  const auto losses = ae::reconstruction_losses(m, ds);
  std::vector<std::pair<std::string, double>> named;
  for (std::size_t i = 0; i < ds.size(); ++i) named.emplace_back(ds.trajectories[i].id, losses[i]);
  const auto scores = analysis::outlier_probabilities(named);
  auto csv = open_out(cfg.out_dir() / "outliers.csv");
  analysis::write_outliers_csv(csv, scores);

  std::map<std::string, const Trajectory *> by_id;
  for (const auto & t : raw.trajectories) by_id[t.id] = &t;
  const auto k = std::min(static_cast<std::size_t>(cfg.integer("outliers.k")), scores.size());
  Dataset top;
  for (std::size_t i = 0; i < k; ++i) top.trajectories.push_back(*by_id.at(scores[i].id));
  auto svg = open_out(cfg.out_dir() / "outliers.svg");
  plot_trajectories(svg, top, {fmt::format("top {} outlier candidates", k), "", ""});
  for (std::size_t i = 0; i < k; ++i) {
    std::cout << fmt::format("{} loss={:.6g} prob={:.6g}\n", scores[i].id, scores[i].loss, scores[i].prob);
  }
}

void cmd_plot(const RunConfig & cfg)
{
  prepare_out(cfg, "plot");
  if (cfg.str("plot.input").empty()) throw ConfigError("plot.input must be set");
  const fs::path output = in_out(cfg, "plot.output");
  render_plot(parse_plot_kind(cfg.str("plot.kind")), cfg.str("plot.input"), output,
              {cfg.str("plot.title"), cfg.str("plot.x_label"), cfg.str("plot.y_label")});
  std::cout << "wrote " << output.string() << "\n";
}

int run_cli(const std::vector<std::string> & args)
{
  CLI::App app{"Synthetic driving-scenario generation, evaluation and analysis", "scenforge"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "key=value config file");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--override", overrides, "KEY=VALUE, repeatable")->take_all();

  std::string stage;
  auto * synth = app.add_subcommand("synth", "write a synthetic labeled dataset");
  auto * train = app.add_subcommand("train", "train ae, len, lgan or rcgan");
  train->add_option("stage", stage, "ae | len | lgan | rcgan")->required()->check(CLI::IsMember({"ae", "len", "lgan", "rcgan"}));
  auto * sample = app.add_subcommand("sample", "generate trajectories from a trained generator");
  auto * eval = app.add_subcommand("eval", "matching, coverage and Hungarian set metrics");
  auto * cluster = app.add_subcommand("cluster", "embed latents, cluster and compare with labels");
  auto * outliers = app.add_subcommand("outliers", "rank trajectories by outlier probability");
  auto * plot = app.add_subcommand("plot", "render an SVG plot");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError & e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg.merge_file(config_path);
    if (seed) cfg.set("seed", std::to_string(*seed));
    if (!out_dir.empty()) cfg.set("out", out_dir);
    for (const auto & o : overrides) cfg.set_override(o);

    if (synth->parsed()) cmd_synth(cfg);
    if (train->parsed()) cmd_train(cfg, stage);
    if (sample->parsed()) cmd_sample(cfg);
    if (eval->parsed()) cmd_eval(cfg);
    if (cluster->parsed()) cmd_cluster(cfg);
    if (outliers->parsed()) cmd_outliers(cfg);
    if (plot->parsed()) cmd_plot(cfg);
  } catch (const ConfigError & e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const MissingArtifactError & e) {
    std::cerr << "missing artifact: " << e.what() << "\n";
    return kExitMissingArtifact;
  } catch (const NumericError & e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace scenforge::cli
