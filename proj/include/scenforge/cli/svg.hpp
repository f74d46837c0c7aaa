#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "scenforge/trajectory.hpp"

namespace scenforge::cli
{

enum class PlotKind { TrajectoryLines, ScatterEmbedding, MatchedDistanceCurve, LossCurve };

PlotKind parse_plot_kind(const std::string & s);

struct Series
{
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::string color;
  bool markers{false};
};

/// Minimal standalone SVG chart: framed axes with ticks, one <path> per line
/// series and one <circle> per marker. Numbers use fixed precision so output
/// bytes depend only on the data.
class SvgPlot
{
public:
  SvgPlot(std::string title, std::string x_label, std::string y_label);

  void add(Series s) { series_.push_back(std::move(s)); }
  void render(std::ostream & out) const;

private:
  std::string title_;
  std::string x_label_;
  std::string y_label_;
  std::vector<Series> series_;
};

/// Categorical colour for index i; kNoise maps to red.
std::string palette(int i);

struct PlotLabels
{
  std::string title;
  std::string x_label;
  std::string y_label;
};

/// One line per trajectory, longitudinal on x and lateral on y.
void plot_trajectories(std::ostream & out, const Dataset & ds, const PlotLabels & labels);

/// Reads `input` according to `kind` and writes the SVG to `output`. Throws
/// MissingArtifactError when the input is absent and ParseError when malformed.
void render_plot(PlotKind kind, const std::filesystem::path & input, const std::filesystem::path & output,
                 const PlotLabels & labels);

}  // namespace scenforge::cli
