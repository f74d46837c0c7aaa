#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "scenforge/ae/length_estimator.hpp"
#include "scenforge/analysis/clustering.hpp"
#include "scenforge/analysis/outliers.hpp"
#include "scenforge/analysis/reduce.hpp"
#include "scenforge/cli/commands.hpp"
#include "scenforge/gen/latent_gan.hpp"
#include "scenforge/gen/rcgan.hpp"
#include "scenforge/metrics/dtw.hpp"
#include "scenforge/metrics/hungarian.hpp"
#include "scenforge/metrics/set_metrics.hpp"
#include "scenforge/nn/grad_check.hpp"
#include "scenforge/nn/layers.hpp"
#include "scenforge/synth.hpp"

namespace
{
using namespace scenforge;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome
{
  bool pass{false};
  std::string detail;
};

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Shared fixtures are built once; time spent building them is charged only to
// the criterion that owns them.
double g_fixture_seconds = 0.0;
double g_owned_seconds = 0.0;

struct CutInFixture
{
  Dataset raw;
  Dataset normalized;
  ae::AeTrainResult ae;
  double build_seconds{0.0};
};

constexpr std::uint64_t kCutInSeed = 1;
constexpr std::size_t kCutInCount = 500;

std::optional<CutInFixture> g_cutin;

ae::AeConfig base_ae_config()
{
  ae::AeConfig cfg;
  cfg.hidden_size = 32;
  cfg.latent_size = 32;
  cfg.layers = 2;
  cfg.epochs = 200;
  cfg.seed = 7;
  return cfg;
}

const CutInFixture & cutin_fixture()
{
  if (!g_cutin) {
    const auto t0 = Clock::now();
    CutInFixture f;
    f.raw = synth_dataset({kCutInCount, 0, 0}, SynthParams{}, kCutInSeed);
    f.normalized = normalize(f.raw, fit_normalization(f.raw));
    f.ae = ae::train_autoencoder(f.normalized, base_ae_config());
    f.build_seconds = seconds_since(t0);
    g_fixture_seconds += f.build_seconds;
    g_cutin = std::move(f);
  }
  return *g_cutin;
}

// ---------------------------------------------------------------- 1
Outcome autodiff_correctness()
{
  double worst = 0.0;
  int checks = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    auto random_matrix = [&rng](Eigen::Index r, Eigen::Index c) {
      nn::Matrix m(r, c);
      for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.normal();
      return m;
    };
    nn::GradCheckOptions opts;
    opts.seed = seed;

    const auto mlp = nn::MlpParams::create("mlp", {4, 6, 5, 3}, nn::Activation::Tanh, nn::Activation::Linear, rng);
    const nn::Matrix x_mlp = random_matrix(5, 4);
    const nn::Matrix y_mlp = random_matrix(5, 3);
    worst = std::max(worst, nn::grad_check([&](nn::Tape & t) {
      return nn::mse(mlp.forward(t, t.constant(x_mlp)), y_mlp);
    }, mlp.parameters(), opts));

    const auto res = nn::ResNetParams::create("res", 4, 6, 2, 3, nn::Activation::Tanh, nn::Activation::Linear, rng);
    worst = std::max(worst, nn::grad_check([&](nn::Tape & t) {
      return nn::mse(res.forward(t, t.constant(x_mlp)), y_mlp);
    }, res.parameters(), opts));

    std::vector<nn::Matrix> steps;
    for (int s = 0; s < 4; ++s) steps.push_back(random_matrix(3, 2));
    auto as_vars = [&steps](nn::Tape & t) {
      std::vector<nn::Var> v;
      for (const auto & m : steps) v.push_back(t.constant(m));
      return v;
    };

    const auto lstm = nn::LstmParams::create("lstm", 2, 5, rng);
    nn::ParameterList lstm_params;
    lstm.append_parameters(lstm_params);
    const nn::Matrix y_lstm = random_matrix(3, 20);
    worst = std::max(worst, nn::grad_check([&](nn::Tape & t) {
      return nn::mse(nn::concat_cols(nn::forward_lstm(t, lstm, as_vars(t)).outputs), y_lstm);
    }, lstm_params, opts));

    const auto fwd = nn::LstmParams::create("bi.f", 2, 4, rng);
    const auto bwd = nn::LstmParams::create("bi.b", 2, 4, rng);
    nn::ParameterList bi_params;
    fwd.append_parameters(bi_params);
    bwd.append_parameters(bi_params);
    const nn::Matrix y_bi = random_matrix(3, 32);
    worst = std::max(worst, nn::grad_check([&](nn::Tape & t) {
      return nn::mse(nn::concat_cols(nn::forward_bilstm(t, fwd, bwd, as_vars(t))), y_bi);
    }, bi_params, opts));
    checks += 4;
  }
  return {worst < 1e-4, fmt::format("{} checks over 20 seeds, max relative error {:.3g}", checks, worst)};
}

// ---------------------------------------------------------------- 2
Trajectory random_short(Rng & rng, std::size_t max_len)
{
  Trajectory t;
  t.points.resize(1 + rng.index(max_len));
  for (auto & p : t.points) p = {rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
  return t;
}

double dtw_oracle(const Trajectory & a, const Trajectory & b)
{
  std::map<std::pair<std::size_t, std::size_t>, double> memo;
  std::function<double(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t j) -> double {
    const auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const double cost = std::hypot(a.points[i].lat - b.points[j].lat, a.points[i].lon - b.points[j].lon);
    double best;
    if (i == 0 && j == 0) {
      best = 0.0;
    } else if (i == 0) {
      best = rec(0, j - 1);
    } else if (j == 0) {
      best = rec(i - 1, 0);
    } else {
      best = std::min({rec(i - 1, j), rec(i, j - 1), rec(i - 1, j - 1)});
    }
    return memo[key] = cost + best;
  };
  return rec(a.length() - 1, b.length() - 1);
}

Outcome dtw_oracle_check()
{
  Rng rng(2);
  int mismatches = 0;
  for (int k = 0; k < 200; ++k) {
    const auto a = random_short(rng, 8);
    const auto b = random_short(rng, 8);
    if (metrics::dtw(a, b) != dtw_oracle(a, b)) ++mismatches;
  }
  int identity_fail = 0;
  int symmetry_fail = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto a = random_short(rng, 20);
    const auto b = random_short(rng, 20);
    if (metrics::dtw(a, a) != 0.0) ++identity_fail;
    if (metrics::dtw(a, b) != metrics::dtw(b, a)) ++symmetry_fail;
  }
  return {mismatches == 0 && identity_fail == 0 && symmetry_fail == 0,
          fmt::format("oracle mismatches {}/200, identity failures {}/1000, symmetry failures {}/1000", mismatches,
                      identity_fail, symmetry_fail)};
}

// ---------------------------------------------------------------- 3
double brute_force_assignment(const Eigen::MatrixXd & c)
{
  std::vector<int> perm(static_cast<std::size_t>(c.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) total += c(static_cast<Eigen::Index>(i), perm[i]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Outcome hungarian_oracle_check()
{
  Rng rng(3);
  int mismatches = 0;
  for (int k = 0; k < 100; ++k) {
    const auto n = static_cast<Eigen::Index>(1 + rng.index(7));
    Eigen::MatrixXd c(n, n);
    for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = static_cast<double>(rng.index(100));
    if (metrics::hungarian(c).total != brute_force_assignment(c)) ++mismatches;
  }
  Eigen::MatrixXd ex(3, 3);
  ex << 1, 2, 3, 2, 4, 6, 3, 6, 9;
  const double example = metrics::hungarian(ex).total;
  return {mismatches == 0 && example == 10.0,
          fmt::format("brute-force mismatches {}/100 (n <= 7), 3x3 example total {}", mismatches, example)};
}

// ---------------------------------------------------------------- 4
metrics::DistanceMatrix make_dm(const Eigen::MatrixXd & d)
{
  metrics::DistanceMatrix dm;
  dm.d = d;
  for (Eigen::Index i = 0; i < d.rows(); ++i) dm.row_ids.push_back("g" + std::to_string(i));
  for (Eigen::Index j = 0; j < d.cols(); ++j) dm.col_ids.push_back("r" + std::to_string(j));
  return dm;
}

Outcome set_metric_contracts()
{
  const auto rs = synth_dataset({8, 4, 4}, SynthParams{}, 4);
  const auto self = metrics::pairwise_matrix(rs, rs);
  const double self_matching = metrics::matching_score(self);
  const double self_coverage = metrics::coverage_score(self);

  Eigen::MatrixXd d22(2, 2);
  d22 << 1, 2, 3, 0;
  Eigen::MatrixXd d32(3, 2);
  d32 << 1, 2, 0.5, 2, 0.1, 2;
  const double m22 = metrics::matching_score(make_dm(d22));
  const double c22 = metrics::coverage_score(make_dm(d22));
  const double m32 = metrics::matching_score(make_dm(d32));
  const double c32 = metrics::coverage_score(make_dm(d32));
  const std::vector<double> matched{1, 2, 3, 100};
  const double trunc = metrics::hungarian_truncated(matched, 0.75);

  const bool ok = self_matching == 0.0 && self_coverage == 1.0 && std::abs(m22 - 0.5) <= 1e-12 &&
                  std::abs(c22 - 1.0) <= 1e-12 && std::abs(m32 - 1.6 / 3.0) <= 1e-12 && std::abs(c32 - 0.5) <= 1e-12 &&
                  trunc == 2.0;
  return {ok, fmt::format(
                "GS=RS matching {} coverage {}; 2x2 ({}, {}); 3x2 ({:.15g}, {}); truncated(0.75) {}", self_matching,
                self_coverage, m22, c22, m32, c32, trunc)};
}

// ---------------------------------------------------------------- 5
Outcome outlier_probability_contract()
{
  const double ln2 = std::log(2.0);
  const auto scores = analysis::outlier_probabilities({{"a", 0.0}, {"b", ln2}, {"c", 2.0 * ln2}});
  std::map<std::string, double> prob;
  for (const auto & s : scores) prob[s.id] = s.prob;
  const bool closed_form = std::abs(prob["a"] - 0.25) <= 1e-12 && std::abs(prob["b"] - 0.5) <= 1e-12 &&
                           std::abs(prob["c"] - 1.0) <= 1e-12;

  Rng rng(5);
  std::vector<std::pair<std::string, double>> losses;
  for (int i = 0; i < 500; ++i) losses.emplace_back(std::to_string(i), rng.uniform(0.0, 40.0));
  const auto rand_scores = analysis::outlier_probabilities(losses);
  const auto max_it = std::max_element(
    losses.begin(), losses.end(), [](const auto & x, const auto & y) { return x.second < y.second; });
  bool in_range = true;
  for (const auto & s : rand_scores) in_range = in_range && s.prob > 0.0 && s.prob <= 1.0;
  const bool max_is_one = rand_scores.front().id == max_it->first && rand_scores.front().prob == 1.0;
  return {closed_form && in_range && max_is_one,
          fmt::format("closed form [{:.15g}, {:.15g}, {:.15g}]; probs in (0,1]: {}; max-loss prob exactly 1: {}",
                      prob["a"], prob["b"], prob["c"], in_range, max_is_one)};
}

// ---------------------------------------------------------------- 6
Outcome gradient_penalty_check()
{
  Rng rng(6);
  const int dim = 5;
  nn::Matrix w(dim, 1);
  for (int i = 0; i < dim; ++i) w(i, 0) = rng.normal();
  w *= 3.0 / w.norm();
  const gen::Critic linear = [&w](nn::Tape & t, nn::Var x) { return nn::matmul(x, t.constant(w)); };
  nn::Matrix real(16, dim);
  nn::Matrix fake(16, dim);
  for (Eigen::Index i = 0; i < real.size(); ++i) {
    real(i) = rng.normal();
    fake(i) = rng.normal() + 2.0;
  }
  double penalty = 0.0;
  {
    nn::Tape tape;
    Rng gp_rng = rng.split("gp");
    penalty = gen::gradient_penalty(tape, linear, real, fake, gp_rng, 1e-3).scalar();
  }

  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng net_rng(100 + seed);
    const auto critic_net = nn::MlpParams::create(
      "critic", {dim, 16, 1}, nn::Activation::Tanh, nn::Activation::Linear, net_rng);
    const gen::Critic critic = [&critic_net](nn::Tape & t, nn::Var x) { return critic_net.forward(t, x); };
    nn::Matrix x(8, dim);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = net_rng.normal();
    nn::Tape fd_tape;
    const nn::Matrix fd = gen::fd_input_gradient(fd_tape, critic, x, 1e-3).value();
    nn::Tape ad_tape;
    const auto xv = ad_tape.input(x);
    ad_tape.backward(nn::sum(critic(ad_tape, xv)));
    const nn::Matrix ad = ad_tape.grad(xv);
    worst = std::max(worst, (fd - ad).cwiseAbs().maxCoeff());
  }
  const bool ok = std::abs(penalty - 4.0) <= 1e-8 && worst <= 1e-6;
  return {ok, fmt::format("linear critic penalty {:.12f}; max |FD - autodiff| {:.3g} over 10 critics", penalty, worst)};
}

// ---------------------------------------------------------------- 7
constexpr int kSweepEpochs = 60;
// Hidden 128 diverges for its first 20 epochs at the default rate.
constexpr double kSweepLr = 1e-3;

double best_val(const std::vector<ae::EpochRecord> & history)
{
  double best = std::numeric_limits<double>::infinity();
  for (const auto & r : history) best = std::min(best, r.val_loss);
  return best;
}

Outcome ae_pipeline()
{
  const double before = g_fixture_seconds;
  const auto & f = cutin_fixture();
  if (g_fixture_seconds == before) {
    g_owned_seconds += f.build_seconds;
  } else {
    g_fixture_seconds = before;
  }
  const auto & h = f.ae.history;
  const double first = h.front().val_loss;
  const double last = h.back().val_loss;
  const bool reduced = last < 0.5 * first;

  std::vector<double> bests;
  for (int hidden : {32, 64, 128}) {
    auto cfg = base_ae_config();
    cfg.hidden_size = hidden;
    cfg.epochs = kSweepEpochs;
    cfg.lr = kSweepLr;
    bests.push_back(best_val(ae::train_autoencoder(f.normalized, cfg).history));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < bests.size(); ++i) monotone = monotone && bests[i] <= 1.1 * bests[i - 1];
  return {reduced && monotone,
          fmt::format("val loss epoch 1 {:.4g} -> epoch {} {:.4g} (ratio {:.3f}); sweep best val hs32/64/128 "
                      "{:.4g}/{:.4g}/{:.4g} at {} epochs, lr {:g}",
                      first, h.size(), last, last / first, bests[0], bests[1], bests[2], kSweepEpochs, kSweepLr)};
}

// ---------------------------------------------------------------- 8
Outcome length_estimator()
{
  const auto & f = cutin_fixture();
  const auto ld = ae::encode_dataset(f.ae.model, f.normalized);
  ae::LenConfig cfg;
  cfg.seed = 8;
  const auto res = ae::train_length_estimator(ld, f.ae.model.length_range, cfg, f.ae.model.fingerprint());
  return {res.holdout_exact >= 0.8 && res.holdout_within2 >= 0.95,
          fmt::format("{} held-out latents: {:.1f}% exact, {:.1f}% within 2 frames", res.holdout_rows.size(),
                      100.0 * res.holdout_exact, 100.0 * res.holdout_within2)};
}

// ---------------------------------------------------------------- 9
Outcome rcgan_conditioning()
{
  const Dataset raw = synth_dataset({kCutInCount, 0, 0}, SynthParams{}, kCutInSeed);
  const Dataset ds = normalize(raw, fit_normalization(raw));
  gen::RcganConfig cfg;
  cfg.iterations = 5000;
  cfg.seed = 9;
  const auto res = gen::train_rcgan(ds, cfg);
  Rng rng(90);
  std::size_t wrong_length = 0;
  std::size_t total = 0;
  for (std::size_t len = 30; len <= 70; ++len) {
    Rng r = rng.split(len);
    for (const auto & t : gen::sample_rcgan(res.model, len, 20, r).trajectories) {
      wrong_length += t.length() == len ? 0 : 1;
      ++total;
    }
  }
  auto settled_share = [&](std::size_t len) {
    Rng r = rng.split("end").split(len);
    const auto s = gen::sample_rcgan(res.model, len, 100, r);
    std::size_t ok = 0;
    for (const auto & t : s.trajectories) ok += std::abs(t.points.back().lat) < 0.9 ? 1 : 0;
    return static_cast<double>(ok) / static_cast<double>(s.size());
  };
  const double at30 = settled_share(30);
  const double at70 = settled_share(70);
  return {wrong_length == 0 && at30 >= 0.7 && at70 >= 0.7,
          fmt::format("wrong lengths {}/{} over [30,70]; ending |lat| < 0.9 m: L=30 {:.0f}%, L=70 {:.0f}%",
                      wrong_length, total, 100.0 * at30, 100.0 * at70)};
}

// ---------------------------------------------------------------- 10
Outcome metric_protocol()
{
  const auto & f = cutin_fixture();
  const auto & model = f.ae.model;
  const auto ld = ae::encode_dataset(model, f.normalized);
  ae::LenConfig lc;
  lc.seed = 8;
  const auto len = ae::train_length_estimator(ld, model.length_range, lc, model.fingerprint()).model;

  gen::LatentGanConfig gan_cfg;
  gan_cfg.mode = gen::GanMode::StandardGan;
  gan_cfg.iterations = 500;
  gan_cfg.seed = 10;
  const auto gan = gen::train_latent_gan(ld, gan_cfg, model.fingerprint()).model;
  gen::LatentGanConfig wgan_cfg;
  wgan_cfg.mode = gen::GanMode::WganGp;
  wgan_cfg.seed = 10;
  const auto wgan = gen::train_latent_gan(ld, wgan_cfg, model.fingerprint()).model;

  metrics::EvalConfig ec;
  ec.runs = 5;
  ec.m_over_n = 4;
  ec.n = 50;
  ec.seed = 10;
  Rng rng(1000);
  Rng gan_rng = rng.split("gan");
  Rng wgan_rng = rng.split("wgan");
  const auto gan_set = gen::generate_trajectories(gan, model, len, 200, gan_rng, "gan");
  const auto wgan_set = gen::generate_trajectories(wgan, model, len, 200, wgan_rng, "wgan");

  const auto baseline = metrics::baseline_split_eval(f.raw, ec);
  const auto gan_eval = metrics::evaluate_sets(gan_set, f.raw, ec);
  const auto wgan_eval = metrics::evaluate_sets(wgan_set, f.raw, ec);

  std::ostringstream table;
  metrics::write_table(table, {{"real (baseline)", baseline}, {"ae-gan", gan_eval}, {"ae-wgan-gp", wgan_eval}}, 0.75);
  std::cout << table.str();

  bool shape = true;
  for (const auto * s : {&baseline, &gan_eval, &wgan_eval}) {
    shape = shape && s->runs.size() == 5;
    for (const auto & r : s->runs) shape = shape && r.m == 4 * r.n && r.n == 50;
    shape = shape && s->coverage.min <= s->coverage.avg && s->coverage.avg <= s->coverage.max;
  }
  bool truncated_below = true;
  for (const auto & r : wgan_eval.runs) truncated_below = truncated_below && r.hungarian_truncated < r.hungarian_mean;
  const bool coverage_order = baseline.coverage.avg > gan_eval.coverage.avg;
  return {shape && coverage_order && truncated_below,
          fmt::format("coverage avg baseline {:.3f} vs ae-gan@500 {:.3f}; wgan-gp truncated < full in all runs: {}; "
                      "protocol shape ok: {}",
                      baseline.coverage.avg, gan_eval.coverage.avg, truncated_below, shape)};
}

// ---------------------------------------------------------------- 11
std::vector<int> naive_dbscan(const Eigen::MatrixXd & p, double eps, int min_neighbors)
{
  const auto n = static_cast<std::size_t>(p.rows());
  std::vector<std::vector<std::size_t>> nbr(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if ((p.row(static_cast<Eigen::Index>(i)) - p.row(static_cast<Eigen::Index>(j))).norm() <= eps) nbr[i].push_back(j);
    }
  }
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) core[i] = static_cast<int>(nbr[i].size()) >= min_neighbors;
  // Union-find over core-core edges, then components ordered by smallest core index.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    for (auto j : nbr[i]) {
      if (core[j]) parent[find(i)] = find(j);
    }
  }
  std::map<std::size_t, int> component_id;
  std::vector<int> labels(n, analysis::kNoise);
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    const auto root = find(i);
    if (!component_id.count(root)) {
      const int next = static_cast<int>(component_id.size());
      component_id[root] = next;
    }
    labels[i] = component_id[root];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    int best = -1;
    for (auto j : nbr[i]) {
      if (core[j] && (best < 0 || labels[j] < best)) best = labels[j];
    }
    labels[i] = best;
  }
  return labels;
}

bool same_partition(const std::vector<int> & a, const std::vector<int> & b)
{
  if (a.size() != b.size()) return false;
  std::map<int, int> ab;
  std::map<int, int> ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] == analysis::kNoise) != (b[i] == analysis::kNoise)) return false;
    if (a[i] == analysis::kNoise) continue;
    if (ab.count(a[i]) && ab[a[i]] != b[i]) return false;
    if (ba.count(b[i]) && ba[b[i]] != a[i]) return false;
    ab[a[i]] = b[i];
    ba[b[i]] = a[i];
  }
  return true;
}

constexpr int kClusterAeEpochs = 60;

Outcome clustering_pipeline()
{
  Rng rng(11);
  int dbscan_mismatch = 0;
  for (int k = 0; k < 20; ++k) {
    Eigen::MatrixXd p(200, 2);
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = rng.uniform(0.0, 10.0);
    const double eps = rng.uniform(0.3, 1.5);
    const int min_neighbors = 1 + static_cast<int>(rng.index(8));
    if (!same_partition(analysis::dbscan(p, eps, min_neighbors).labels, naive_dbscan(p, eps, min_neighbors))) {
      ++dbscan_mismatch;
    }
  }

  Eigen::MatrixXd rank1(50, 6);
  Eigen::RowVectorXd dir(6);
  for (Eigen::Index j = 0; j < 6; ++j) dir(j) = rng.normal();
  for (Eigen::Index i = 0; i < 50; ++i) rank1.row(i) = rng.normal() * dir;
  const double pca_first = analysis::pca_fit_transform(rank1, 2).explained_variance.front();

  const Dataset raw = synth_dataset({300, 200, 200}, SynthParams{}, 111);
  const Dataset ds = normalize(raw, fit_normalization(raw));
  auto ae_cfg = base_ae_config();
  ae_cfg.epochs = kClusterAeEpochs;
  const auto model = ae::train_autoencoder(ds, ae_cfg).model;
  std::vector<ScenarioLabel> labels;
  for (const auto & t : ds.trajectories) labels.push_back(*t.label);
  Rng balance_rng = rng.split("balance");
  const auto rows = analysis::balance_classes(labels, balance_rng);
  const auto ld = ae::encode_dataset(model, ds);
  std::vector<Eigen::VectorXd> picked;
  std::vector<ScenarioLabel> truth;
  for (auto r : rows) {
    picked.push_back(ld.latents[r]);
    truth.push_back(labels[r]);
  }
  analysis::TsneConfig tc;
  tc.seed = 11;
  const auto emb = analysis::tsne_embed(analysis::stack_rows(picked), tc);
  const auto sweep = analysis::dbscan_sweep(emb.embedding.points, truth, analysis::SweepConfig{});
  double purity = 0.0;
  bool refinement = false;
  std::string setting = "none eligible";
  if (sweep.best >= 0) {
    const auto & row = sweep.rows[static_cast<std::size_t>(sweep.best)];
    purity = row.purity;
    refinement = row.refinement;
    setting = fmt::format("eps {:.3g}, min_neighbors {}, {} clusters, noise {:.1f}%", row.eps, row.min_neighbors,
                          row.clusters, 100.0 * row.noise_fraction);
  }
  const bool ok = dbscan_mismatch == 0 && std::abs(pca_first - 1.0) <= 1e-9 && rows.size() == 600 &&
                  purity >= 0.9 && refinement;
  return {ok, fmt::format("balanced set {}; best sweep row: {}; purity {:.3f}, refinement {}; "
                          "dbscan vs naive mismatches {}/20; pca rank-1 explained {:.12f}",
                          rows.size(), setting, purity, refinement, dbscan_mismatch, pca_first)};
}

// ---------------------------------------------------------------- 12
struct Screening
{
  std::size_t caught{0};
  std::size_t worst_rank{0};
};

// A jump displaces the track from a random interior frame to the end; a spike
// displaces one interior frame only.
Screening screen_injected(const ae::AeModel & model, bool spike)
{
  Dataset ds = synth_dataset({2000, 0, 0}, SynthParams{}, 12);
  Rng rng(12);
  const auto victims = sample_indices(ds.size(), 20, rng);
  std::set<std::string> injected;
  for (auto v : victims) {
    auto & t = ds.trajectories[v];
    const std::size_t from = 1 + rng.index(t.length() - 2);
    if (spike) {
      t.points[from].lon += 30.0;
    } else {
      for (std::size_t k = from; k < t.length(); ++k) t.points[k].lat += 3.5;
    }
    injected.insert(t.id);
  }
  const auto losses = ae::reconstruction_losses(model, normalize(ds, model.norm));
  std::vector<std::pair<std::string, double>> named;
  for (std::size_t i = 0; i < ds.size(); ++i) named.emplace_back(ds.trajectories[i].id, losses[i]);
  const auto scores = analysis::outlier_probabilities(named);
  const std::size_t top = ds.size() * 2 / 100;
  Screening s;
  for (std::size_t r = 0; r < scores.size(); ++r) {
    if (injected.count(scores[r].id)) {
      s.worst_rank = r + 1;
      s.caught += r < top ? 1 : 0;
    }
  }
  return s;
}

Outcome outlier_screening()
{
  const auto & f = cutin_fixture();
  const auto jump = screen_injected(f.ae.model, false);
  const auto spike = screen_injected(f.ae.model, true);
  return {jump.caught == 20,
          fmt::format("{}/20 lane-width jumps in top 40 of 2000, worst rank {}; "
                      "informational: {}/20 single-frame 30 m longitudinal spikes, worst rank {}",
                      jump.caught, jump.worst_rank, spike.caught, spike.worst_rank)};
}

// ---------------------------------------------------------------- 13
std::map<std::string, std::string> snapshot(const fs::path & dir)
{
  std::map<std::string, std::string> files;
  for (const auto & e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    files[fs::relative(e.path(), dir).string()] =
      std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  }
  return files;
}

Outcome cli_determinism()
{
  const fs::path dir = fs::temp_directory_path() / "scenforge_acceptance_determinism";
  const std::string out = dir.string();
  const std::vector<std::vector<std::string>> commands{
    {"synth", "--override", "synth.cutin=80", "--override", "synth.driveby_left=40", "--override",
     "synth.driveby_right=40"},
    {"train", "ae", "--override", "ae.epochs=3", "--override", "ae.hidden=16,24"},
    {"train", "ae", "--override", "ae.epochs=3"},
    {"train", "len", "--override", "len.epochs=30"},
    {"train", "lgan", "--override", "lgan.iterations=30"},
    {"train", "rcgan", "--override", "rcgan.iterations=10"},
    {"sample", "--override", "sample.n=40"},
    {"sample", "--override", "sample.source=rcgan", "--override", "sample.lengths=30:5,70:5", "--override",
     "sample.output=rc.jsonl"},
    {"eval", "--override", "data.generated=" + out + "/samples.jsonl", "--override", "eval.n=10", "--override",
     "eval.runs=3", "--override", "eval.baseline=true"},
    {"cluster", "--override", "cluster.perplexity=10", "--override", "cluster.iterations=150"},
    {"outliers", "--override", "outliers.k=5"},
    {"plot", "--override", "plot.kind=loss", "--override", "plot.input=" + out + "/ae_history.csv"},
  };
  std::vector<std::map<std::string, std::string>> passes;
  std::vector<std::string> failures;
  for (int pass = 0; pass < 2; ++pass) {
    fs::remove_all(dir);
    for (const auto & cmd : commands) {
      std::vector<std::string> args{"--seed", "13", "--out", out};
      args.insert(args.end(), cmd.begin(), cmd.end());
      std::ostringstream sink;
      auto * old = std::cout.rdbuf(sink.rdbuf());
      const int rc = cli::run_cli(args);
      std::cout.rdbuf(old);
      if (rc != 0) failures.push_back(fmt::format("{} exited {}", cmd.front(), rc));
    }
    passes.push_back(snapshot(dir));
  }
  std::size_t differing = 0;
  for (const auto & [name, bytes] : passes[0]) {
    const auto it = passes[1].find(name);
    if (it == passes[1].end() || it->second != bytes) ++differing;
  }
  differing += passes[1].size() > passes[0].size() ? passes[1].size() - passes[0].size() : 0;
  const std::vector<std::string> configs{"synth", "train-ae", "train-len", "train-lgan", "train-rcgan",
                                         "sample", "eval", "cluster", "outliers", "plot"};
  std::size_t missing_configs = 0;
  for (const auto & c : configs) missing_configs += passes[0].count("config." + c + ".txt") ? 0 : 1;
  fs::remove_all(dir);
  return {failures.empty() && differing == 0 && missing_configs == 0 && !passes[0].empty(),
          fmt::format("{} commands x 2 runs, {} output files, {} differing, {} command failures, {} missing resolved "
                      "configs",
                      commands.size(), passes[0].size(), differing, failures.size(), missing_configs)};
}

struct Criterion
{
  int id;
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char ** argv)
{
  const std::vector<Criterion> criteria{
    {1, "autodiff gradients match finite differences", 60.0, autodiff_correctness},
    {2, "DTW equals memoized oracle, identity and symmetry", 30.0, dtw_oracle_check},
    {3, "Hungarian equals exhaustive permutations", 10.0, hungarian_oracle_check},
    {4, "matching / coverage / truncated Hungarian contracts", 1.0, set_metric_contracts},
    {5, "outlier probability contract", 1.0, outlier_probability_contract},
    {6, "WGAN-GP penalty and finite-difference input gradient", 10.0, gradient_penalty_check},
    {7, "autoencoder training and hidden-size sweep", 900.0, ae_pipeline},
    {8, "length estimator accuracy", 120.0, length_estimator},
    {9, "RC-GAN length conditioning", 1800.0, rcgan_conditioning},
    {10, "metric protocol tables", 1200.0, metric_protocol},
    {11, "clustering pipeline", 600.0, clustering_pipeline},
    {12, "outlier screening of injected jumps", 300.0, outlier_screening},
    {13, "CLI byte-identical reruns", 300.0, cli_determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));

  // ctest hides the output of passing tests, so the lines are also kept on disk.
  std::ofstream report("acceptance_results.txt");
  int failed = 0;
  for (const auto & c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const double fixture_before = g_fixture_seconds;
    const double owned_before = g_owned_seconds;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception & e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed =
      seconds_since(t0) - (g_fixture_seconds - fixture_before) + (g_owned_seconds - owned_before);
    const bool in_budget = elapsed < c.budget_s;
    const bool pass = o.pass && in_budget;
    failed += pass ? 0 : 1;
    const auto line = fmt::format("{} [{}] {}: {} ({:.1f} s, budget {:.0f} s{})\n", pass ? "PASS" : "FAIL", c.id,
                                  c.name, o.detail, elapsed, c.budget_s, in_budget ? "" : ", over budget");
    std::cout << line << std::flush;
    report << line << std::flush;
  }
  return failed == 0 ? 0 : 1;
}
