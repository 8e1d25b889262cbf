#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lcval::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;

// Runs one invocation; args excludes the program name. Results go to
// `out`, diagnostics to `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err);

}  // namespace lcval::cli
