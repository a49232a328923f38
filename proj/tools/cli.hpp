#pragma once

#include <exception>
#include <iosfwd>
#include <string>
#include <vector>

namespace genearl::cli {

// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,     // anything not classified below
  kConfig = 2,      // bad flags or run config
  kInvalid = 3,     // malformed or invalid input documents
  kBackend = 4,     // every work unit failed, or a backend error aborted the run
};

int exit_code_for(const std::exception& e);

// Runs one command line (args excludes the program name). Normal output goes
// to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace genearl::cli
