#pragma once

#include <ostream>
#include <span>
#include <string>

namespace cdindex {

/// Stable process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitIo = 2,
  kExitData = 3,
};

/// Runs the command line in-process. `args` excludes the program name.
int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err);

/// Hex SHA-256 of a file's bytes.
std::string file_digest(const std::string& path);

}  // namespace cdindex
