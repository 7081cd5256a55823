#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace distobs {

enum ExitCode : int {
  kExitOk = 0,
  kExitInvalid = 2,      // malformed model, bad flags, unreadable files
  kExitAssumptions = 3,  // joint detectability or column independence fails
  kExitInfeasible = 4,   // some coupling-gain interval is empty
  kExitDiverged = 5,     // simulation overflow
};

struct CommandOutcome {
  int exit_code = kExitOk;
  // Every file written, in write order. A nonzero exit always lists
  // failure.json last.
  std::vector<std::filesystem::path> report_paths;
};

/// Runs one subcommand. `args` excludes the program name, e.g.
/// {"design", "model.json", "--out", "results"}.
CommandOutcome run_command(const std::vector<std::string>& args, std::ostream& out,
                           std::ostream& err);

}  // namespace distobs
