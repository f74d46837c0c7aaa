#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "scenforge/cli/commands.hpp"
#include "scenforge/cli/config.hpp"
#include "scenforge/cli/svg.hpp"
#include "scenforge/errors.hpp"
#include "scenforge/synth.hpp"

namespace
{
using namespace scenforge;
using namespace scenforge::cli;
namespace fs = std::filesystem;

fs::path fresh_dir(const std::string & name)
{
  const fs::path d = fs::temp_directory_path() / ("scenforge_unit_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path & p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count(const std::string & text, const std::string & needle)
{
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

TEST(RunConfig, DefaultsAndTypedAccess)
{
  RunConfig c;
  EXPECT_EQ(c.integer("length.min"), 30);
  EXPECT_EQ(c.str("lgan.mode"), "wgan-gp");
  EXPECT_EQ(c.int_list("len.hidden"), (std::vector<int>{64, 64}));
  EXPECT_TRUE(c.flag("eval.baseline"));
}

TEST(RunConfig, FileParsingCommentsAndUnknownKeys)
{
  RunConfig c;
  std::istringstream ok("# comment\nae.epochs = 3   # trailing\n\nseed=9\n");
  c.merge_text(ok, "mem");
  EXPECT_EQ(c.integer("ae.epochs"), 3);
  EXPECT_EQ(c.u64("seed"), 9u);

  std::istringstream bad("ae.epochs = 3\nae.epochz = 4\n");
  try {
    c.merge_text(bad, "mem");
    FAIL() << "unknown key accepted";
  } catch (const ConfigError & e) {
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }
  std::istringstream malformed("no equals sign\n");
  EXPECT_THROW(c.merge_text(malformed, "mem"), ConfigError);
}

TEST(RunConfig, OverridesAndTypeErrors)
{
  RunConfig c;
  c.set_override("ae.hidden=64");
  EXPECT_EQ(c.integer("ae.hidden"), 64);
  EXPECT_THROW(c.set_override("nope=1"), ConfigError);
  EXPECT_THROW(c.set_override("ae.hidden"), ConfigError);
  c.set_override("ae.hidden=abc");
  EXPECT_THROW(c.integer("ae.hidden"), ConfigError);
}

TEST(RunConfig, WriteIsSortedAndRoundTrips)
{
  RunConfig a;
  a.set_override("sample.n=17");
  std::stringstream ss;
  a.write(ss);
  RunConfig b;
  b.merge_text(ss, "round trip");
  EXPECT_EQ(a.values(), b.values());
}

TEST(Cli, ExitCodes)
{
  const auto dir = fresh_dir("exit");
  EXPECT_EQ(run_cli({"--help"}), kExitOk);
  EXPECT_EQ(run_cli({"bogus"}), kExitConfig);
  EXPECT_EQ(run_cli({"--out", dir.string(), "--override", "no.such=1", "synth"}), kExitConfig);
  EXPECT_EQ(run_cli({"--config", (dir / "absent.cfg").string(), "synth"}), kExitConfig);
  EXPECT_EQ(run_cli({"--out", dir.string(), "train", "ae"}), kExitMissingArtifact);
  EXPECT_EQ(run_cli({"--out", dir.string(), "--override", "plot.input=" + (dir / "x.jsonl").string(), "plot"}),
            kExitMissingArtifact);
}

TEST(Cli, SynthWritesRequestedCountsAndConfig)
{
  const auto dir = fresh_dir("synth");
  ASSERT_EQ(run_cli({"--out", dir.string(), "--seed", "3", "--override", "synth.cutin=7",
                     "--override", "synth.driveby_left=2", "synth"}),
            kExitOk);
  const auto ds = load_dataset(dir / "dataset.jsonl");
  EXPECT_EQ(ds.size(), 9u);
  std::size_t cutins = 0;
  for (const auto & t : ds.trajectories) cutins += (t.label == ScenarioLabel::CutIn);
  EXPECT_EQ(cutins, 7u);
  const auto cfg = slurp(dir / "config.synth.txt");
  EXPECT_NE(cfg.find("seed = 3"), std::string::npos);
  EXPECT_NE(cfg.find("synth.cutin = 7"), std::string::npos);

  const auto again = fresh_dir("synth_again");
  ASSERT_EQ(run_cli({"--out", again.string(), "--seed", "3", "--override", "synth.cutin=7",
                     "--override", "synth.driveby_left=2", "synth"}),
            kExitOk);
  EXPECT_EQ(slurp(dir / "dataset.jsonl"), slurp(again / "dataset.jsonl"));
}

TEST(Plot, LinePlotHasOnePathPerTrajectoryAndIsStable)
{
  const auto dir = fresh_dir("plot");
  const auto ds = synth_dataset({100, 0, 0}, SynthParams{}, 5);
  save_dataset(ds, dir / "d.jsonl");
  std::ofstream(dir / "empty.jsonl").close();

  render_plot(PlotKind::TrajectoryLines, dir / "empty.jsonl", dir / "empty.svg", {});
  render_plot(PlotKind::TrajectoryLines, dir / "d.jsonl", dir / "a.svg", {"t", "", ""});
  render_plot(PlotKind::TrajectoryLines, dir / "d.jsonl", dir / "b.svg", {"t", "", ""});

  const auto empty = slurp(dir / "empty.svg");
  const auto a = slurp(dir / "a.svg");
  EXPECT_NE(empty.find("<svg"), std::string::npos);
  EXPECT_NE(empty.find("</svg>"), std::string::npos);
  EXPECT_EQ(count(a, "<path") - count(empty, "<path"), 100u);
  EXPECT_EQ(a, slurp(dir / "b.svg"));
}

TEST(Plot, CsvKindsValidateColumns)
{
  const auto dir = fresh_dir("plot_csv");
  std::ofstream(dir / "loss.csv") << "epoch,train_loss,val_loss\n0,1.0,1.1\n1,0.5,0.7\n";
  render_plot(PlotKind::LossCurve, dir / "loss.csv", dir / "loss.svg", {});
  const auto svg = slurp(dir / "loss.svg");
  EXPECT_NE(svg.find("train_loss"), std::string::npos);

  std::ofstream(dir / "bad.csv") << "a,b\n1,2\n";
  EXPECT_THROW(render_plot(PlotKind::ScatterEmbedding, dir / "bad.csv", dir / "bad.svg", {}), ParseError);
  EXPECT_THROW(parse_plot_kind("pie"), ConfigError);
}

}  // namespace
