#include "scenforge/cli/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "scenforge/errors.hpp"

namespace scenforge::cli
{
namespace
{

constexpr double kWidth = 800.0;
constexpr double kHeight = 600.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 30.0;
constexpr double kTop = 50.0;
constexpr double kBottom = 60.0;

std::string escape(const std::string & s)
{
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

struct Range
{
  double lo{std::numeric_limits<double>::infinity()};
  double hi{-std::numeric_limits<double>::infinity()};

  void add(double v)
  {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }

  void finish()
  {
    if (lo > hi) {
      lo = 0.0;
      hi = 1.0;
    } else if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

struct Csv
{
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string & name, const std::filesystem::path & path) const
  {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw ParseError(fmt::format("{}: missing column '{}'", path.string(), name));
    }
    return static_cast<std::size_t>(it - header.begin());
  }
};

std::vector<std::string> split(const std::string & line)
{
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Csv read_csv(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw MissingArtifactError(fmt::format("plot input '{}' not found", path.string()));
  }
  Csv csv;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (csv.header.empty()) {
      csv.header = std::move(cells);
      continue;
    }
    if (cells.size() != csv.header.size()) {
      throw ParseError(fmt::format("{}:{}: expected {} columns, got {}", path.string(), number, csv.header.size(),
                                   cells.size()));
    }
    csv.rows.push_back(std::move(cells));
  }
  return csv;
}

double to_double(const std::string & s, const std::filesystem::path & path)
{
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception &) {
  }
  throw ParseError(fmt::format("{}: '{}' is not a number", path.string(), s));
}

void write_file(const std::filesystem::path & output, const SvgPlot & plot)
{
  if (output.has_parent_path()) std::filesystem::create_directories(output.parent_path());
  std::ofstream out(output, std::ios::binary);
  if (!out) {
    throw Error(fmt::format("cannot write '{}'", output.string()));
  }
  plot.render(out);
}

}  // namespace

PlotKind parse_plot_kind(const std::string & s)
{
  if (s == "lines") return PlotKind::TrajectoryLines;
  if (s == "scatter") return PlotKind::ScatterEmbedding;
  if (s == "matched") return PlotKind::MatchedDistanceCurve;
  if (s == "loss") return PlotKind::LossCurve;
  throw ConfigError("unknown plot kind '" + s + "' (expected lines, scatter, matched or loss)");
}

std::string palette(int i)
{
  static const std::array<const char *, 9> colors{"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b",
                                                  "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  if (i < 0) return "#d62728";
  return colors[static_cast<std::size_t>(i) % colors.size()];
}

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label)
: title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label))
{
}

void SvgPlot::render(std::ostream & out) const
{
  Range rx;
  Range ry;
  for (const auto & s : series_) {
    for (double v : s.x) rx.add(v);
    for (double v : s.y) ry.add(v);
  }
  rx.finish();
  ry.finish();
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto sx = [&](double v) { return kLeft + (v - rx.lo) / (rx.hi - rx.lo) * pw; };
  auto sy = [&](double v) { return kTop + ph - (v - ry.lo) / (ry.hi - ry.lo) * ph; };

  out << fmt::format(
    "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.0f} {:.0f}\">\n",
    kWidth, kHeight, kWidth, kHeight);
  out << "<rect x=\"0\" y=\"0\" width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << fmt::format(
    "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"none\" stroke=\"black\"/>\n", kLeft, kTop,
    pw, ph);
  constexpr int kTicks = 5;
  for (int t = 0; t <= kTicks; ++t) {
    const double fx = rx.lo + (rx.hi - rx.lo) * t / kTicks;
    const double fy = ry.lo + (ry.hi - ry.lo) * t / kTicks;
    out << fmt::format(
      "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n", sx(fx), kTop + ph,
      kTop + ph + 5);
    out << fmt::format(
      "<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"11\" text-anchor=\"middle\">{:.3g}</text>\n", sx(fx), kTop + ph + 18,
      fx);
    out << fmt::format(
      "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"black\"/>\n", kLeft - 5, sy(fy), kLeft);
    out << fmt::format(
      "<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"11\" text-anchor=\"end\">{:.3g}</text>\n", kLeft - 8, sy(fy) + 4, fy);
  }
  out << fmt::format(
    "<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n", kWidth / 2, kTop - 20,
    escape(title_));
  out << fmt::format(
    "<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n", kLeft + pw / 2,
    kHeight - 15, escape(x_label_));
  out << fmt::format(
    "<text x=\"20\" y=\"{0:.1f}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 20 {0:.1f})\">{1}</text>\n",
    kTop + ph / 2, escape(y_label_));

  for (const auto & s : series_) {
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (s.markers) {
      for (std::size_t i = 0; i < n; ++i) {
        out << fmt::format(
          "<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"{}\"/>\n", sx(s.x[i]), sy(s.y[i]), s.color);
      }
      continue;
    }
    if (n == 0) continue;
    std::string d;
    for (std::size_t i = 0; i < n; ++i) d += fmt::format("{}{:.2f},{:.2f}", i == 0 ? "M" : " L", sx(s.x[i]), sy(s.y[i]));
    out << fmt::format(
      "<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.2\"><title>{}</title></path>\n", d, s.color,
      escape(s.name));
  }
  out << "</svg>\n";
}

void plot_trajectories(std::ostream & out, const Dataset & ds, const PlotLabels & labels)
{
  SvgPlot plot(
    labels.title, labels.x_label.empty() ? "longitudinal [m]" : labels.x_label,
    labels.y_label.empty() ? "lateral [m]" : labels.y_label);
  int i = 0;
  for (const auto & t : ds.trajectories) {
    Series s{t.id, {}, {}, palette(i++), false};
    for (const auto & p : t.points) {
      s.x.push_back(p.lon);
      s.y.push_back(p.lat);
    }
    plot.add(std::move(s));
  }
  plot.render(out);
}

void render_plot(PlotKind kind, const std::filesystem::path & input, const std::filesystem::path & output,
                 const PlotLabels & labels)
{
  if (!std::filesystem::exists(input)) {
    throw MissingArtifactError(fmt::format("plot input '{}' not found", input.string()));
  }
  auto label_or = [](const std::string & v, const char * fallback) { return v.empty() ? std::string(fallback) : v; };

  if (kind == PlotKind::TrajectoryLines) {
    LoadOptions opts;
    opts.allow_any_length = true;
    const Dataset ds = load_dataset(input, opts);
    if (output.has_parent_path()) std::filesystem::create_directories(output.parent_path());
    std::ofstream out(output, std::ios::binary);
    plot_trajectories(out, ds, labels);
    return;
  }

  const Csv csv = read_csv(input);
  if (kind == PlotKind::ScatterEmbedding) {
    SvgPlot plot(labels.title, label_or(labels.x_label, "dim 1"), label_or(labels.y_label, "dim 2"));
    const auto cx = csv.column("x", input);
    const auto cy = csv.column("y", input);
    const auto cc = csv.column("cluster", input);
    std::map<int, Series> groups;
    for (const auto & row : csv.rows) {
      const int c = static_cast<int>(to_double(row[cc], input));
      auto & s = groups[c];
      if (s.color.empty()) s = {c < 0 ? "noise" : "cluster " + std::to_string(c), {}, {}, palette(c), true};
      s.x.push_back(to_double(row[cx], input));
      s.y.push_back(to_double(row[cy], input));
    }
    for (auto & [c, s] : groups) plot.add(std::move(s));
    write_file(output, plot);
    return;
  }
  if (kind == PlotKind::MatchedDistanceCurve) {
    SvgPlot plot(labels.title, label_or(labels.x_label, "rank"), label_or(labels.y_label, "matched distance"));
    const auto cs = csv.column("set", input);
    const auto cr = csv.column("run", input);
    const auto ck = csv.column("rank", input);
    const auto cd = csv.column("distance", input);
    std::map<std::pair<std::string, std::string>, Series> curves;
    std::map<std::string, int> set_index;
    for (const auto & row : csv.rows) {
      const auto key = std::make_pair(row[cs], row[cr]);
      auto & s = curves[key];
      if (s.color.empty()) {
        const auto inserted = set_index.emplace(row[cs], static_cast<int>(set_index.size())).first;
        s = {row[cs] + " run " + row[cr], {}, {}, palette(inserted->second), false};
      }
      s.x.push_back(to_double(row[ck], input));
      s.y.push_back(to_double(row[cd], input));
    }
    for (auto & [k, s] : curves) plot.add(std::move(s));
    write_file(output, plot);
    return;
  }
  SvgPlot plot(
    labels.title, label_or(labels.x_label, csv.header.empty() ? "step" : csv.header.front().c_str()),
    label_or(labels.y_label, "loss"));
  for (std::size_t c = 1; c < csv.header.size(); ++c) {
    Series s{csv.header[c], {}, {}, palette(static_cast<int>(c) - 1), false};
    for (const auto & row : csv.rows) {
      s.x.push_back(to_double(row[0], input));
      s.y.push_back(to_double(row[c], input));
    }
    plot.add(std::move(s));
  }
  write_file(output, plot);
}

}  // namespace scenforge::cli
