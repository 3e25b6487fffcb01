#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace enskog::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Runs the command line `args` (args[0] is the program name). Help text goes to
/// `out`; failures print one JSON object to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace enskog::cli
