#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "refcast/json.hpp"

namespace refcast::cli {

enum ExitCode : int {
  kOk = 0,
  kDomainError = 1,
  kInsufficientData = 2,
  kIoError = 3,
  kUsageError = 4,
};

struct RunOptions {
  bool styled = false;  // ANSI emphasis in human-readable output
};

/// Parses `args` (args[0] is the program name), dispatches one subcommand and
/// writes reports to `out` and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        RunOptions options = {});

/// Human-readable rendering of a command's JSON result. `--json` output and
/// the text output are both produced from the same document.
std::string render_text(const Json& result, bool styled = false);

}  // namespace refcast::cli
