#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ptrlab::cli {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitNoOutput = 1;
inline constexpr int kExitUsage = 2;

/// Runs the `ptrlab` command line. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ptrlab::cli
