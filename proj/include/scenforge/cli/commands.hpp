#pragma once

#include <string>
#include <vector>

#include "scenforge/cli/config.hpp"

namespace scenforge::cli
{

enum ExitCode : int
{
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitMissingArtifact = 3,
  kExitNumeric = 4,
};

void cmd_synth(const RunConfig & cfg);
/// which: ae | len | lgan | rcgan.
void cmd_train(const RunConfig & cfg, const std::string & which);
void cmd_sample(const RunConfig & cfg);
void cmd_eval(const RunConfig & cfg);
void cmd_cluster(const RunConfig & cfg);
void cmd_outliers(const RunConfig & cfg);
void cmd_plot(const RunConfig & cfg);

/// Parses arguments, dispatches the subcommand and maps errors to exit codes.
int run_cli(const std::vector<std::string> & args);

}  // namespace scenforge::cli
