#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace charvol::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;

/// Runs the command line `args` (without the program name). Results go to
/// files named by --out, or to `out` when --out is absent; diagnostics go
/// to `err`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace charvol::cli
