#include "scenforge/cli/config.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "scenforge/errors.hpp"

namespace scenforge::cli
{
namespace
{

std::string trim(const std::string & s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const std::map<std::string, std::string> & defaults()
{
  static const std::map<std::string, std::string> d{
    {"seed", "0"},
    {"out", "out"},
    {"threads", "0"},
    {"data.real", ""},
    {"data.generated", ""},
    {"checkpoint.ae", ""},
    {"checkpoint.len", ""},
    {"checkpoint.lgan", ""},
    {"checkpoint.rcgan", ""},
    {"length.min", "30"},
    {"length.max", "70"},
    {"synth.cutin", "500"},
    {"synth.driveby_left", "0"},
    {"synth.driveby_right", "0"},
    {"synth.lane_offset", "3.5"},
    {"synth.lon_min", "10"},
    {"synth.lon_max", "120"},
    {"synth.accel_min", "-1.5"},
    {"synth.accel_max", "1.5"},
    {"synth.noise", "0.15"},
    {"synth.decel_fraction", "0.15"},
    {"synth.output", "dataset.jsonl"},
    {"ae.hidden", "32"},
    {"ae.latent", "32"},
    {"ae.layers", "2"},
    {"ae.epochs", "200"},
    {"ae.lr", "0.002"},
    {"ae.batch", "32"},
    {"ae.val_fraction", "0.2"},
    {"ae.clip", "5"},
    {"len.hidden", "64,64"},
    {"len.epochs", "400"},
    {"len.lr", "0.003"},
    {"len.batch", "64"},
    {"len.holdout", "0.2"},
    {"lgan.mode", "wgan-gp"},
    {"lgan.net", "mlp"},
    {"lgan.noise", "16"},
    {"lgan.hidden", "64,64"},
    {"lgan.resnet_width", "64"},
    {"lgan.resnet_blocks", "2"},
    {"lgan.iterations", "2000"},
    {"lgan.batch", "64"},
    {"lgan.n_critic", "5"},
    {"lgan.lambda", "10"},
    {"lgan.gp_h", "0.001"},
    {"lgan.lr_g", "0.0001"},
    {"lgan.lr_d", "0.0001"},
    {"lgan.beta1", "0.5"},
    {"lgan.beta2", "0.9"},
    {"lgan.snapshot_every", "0"},
    {"rcgan.noise", "8"},
    {"rcgan.hidden", "32"},
    {"rcgan.layers", "2"},
    {"rcgan.iterations", "5000"},
    {"rcgan.batch", "32"},
    {"rcgan.lr_g", "0.001"},
    {"rcgan.lr_d", "0.001"},
    {"rcgan.beta1", "0.5"},
    {"rcgan.beta2", "0.999"},
    {"sample.source", "latent"},
    {"sample.n", "200"},
    {"sample.lengths", "30:50,70:50"},
    {"sample.output", "samples.jsonl"},
    {"eval.runs", "5"},
    {"eval.m_over_n", "4"},
    {"eval.n", "50"},
    {"eval.truncate", "0.75"},
    {"eval.baseline", "true"},
    {"cluster.method", "tsne"},
    {"cluster.k", "2"},
    {"cluster.balance", "true"},
    {"cluster.perplexity", "30"},
    {"cluster.iterations", "1000"},
    {"cluster.lr", "200"},
    {"cluster.eps", ""},
    {"cluster.min_neighbors", "5,10,15,25"},
    {"outliers.k", "10"},
    {"plot.kind", "lines"},
    {"plot.input", ""},
    {"plot.output", "plot.svg"},
    {"plot.title", ""},
    {"plot.x_label", ""},
    {"plot.y_label", ""},
  };
  return d;
}

template <typename T>
T parse_number(const std::string & key, const std::string & text)
{
  T v{};
  const auto * end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(fmt::format("'{}' expects a number, got '{}'", key, text));
  }
  return v;
}

double parse_real(const std::string & key, const std::string & text)
{
  // from_chars for double is missing from some older standard libraries.
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (text.empty() || used != text.size()) {
    throw ConfigError(fmt::format("'{}' expects a real number, got '{}'", key, text));
  }
  return v;
}

}  // namespace

RunConfig::RunConfig() : values_(defaults()) {}

void RunConfig::set(const std::string & key, const std::string & value)
{
  if (!defaults().count(key)) {
    throw ConfigError(fmt::format("unknown config key '{}'", key));
  }
  values_[key] = value;
}

void RunConfig::merge_text(std::istream & in, const std::string & origin)
{
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("{}:{}: expected key = value", origin, number));
    }
    const std::string key = trim(line.substr(0, eq));
    if (!defaults().count(key)) {
      throw ConfigError(fmt::format("{}:{}: unknown config key '{}'", origin, number, key));
    }
    values_[key] = trim(line.substr(eq + 1));
  }
}

void RunConfig::merge_file(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
  }
  merge_text(in, path.string());
}

void RunConfig::set_override(const std::string & assignment)
{
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError(fmt::format("override '{}' is not KEY=VALUE", assignment));
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

const std::string & RunConfig::str(const std::string & key) const
{
  const auto it = values_.find(key);
  if (it == values_.end()) {
    throw ConfigError(fmt::format("unknown config key '{}'", key));
  }
  return it->second;
}

double RunConfig::real(const std::string & key) const
{
  return parse_real(key, str(key));
}

long RunConfig::integer(const std::string & key) const
{
  return parse_number<long>(key, str(key));
}

std::uint64_t RunConfig::u64(const std::string & key) const
{
  return parse_number<std::uint64_t>(key, str(key));
}

bool RunConfig::flag(const std::string & key) const
{
  const auto & v = str(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(fmt::format("'{}' expects true or false, got '{}'", key, v));
}

std::vector<std::string> RunConfig::str_list(const std::string & key) const
{
  std::vector<std::string> out;
  std::stringstream ss(str(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> RunConfig::int_list(const std::string & key) const
{
  std::vector<int> out;
  for (const auto & s : str_list(key)) out.push_back(parse_number<int>(key, s));
  return out;
}

std::vector<double> RunConfig::real_list(const std::string & key) const
{
  std::vector<double> out;
  for (const auto & s : str_list(key)) out.push_back(parse_real(key, s));
  return out;
}

std::filesystem::path RunConfig::path_or(const std::string & key, const std::string & fallback) const
{
  const auto & v = str(key);
  return v.empty() ? out_dir() / fallback : std::filesystem::path(v);
}

void RunConfig::write(std::ostream & out) const
{
  for (const auto & [k, v] : values_) out << k << " = " << v << "\n";
}

}  // namespace scenforge::cli
