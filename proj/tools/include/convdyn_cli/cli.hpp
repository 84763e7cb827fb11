#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace convdyn::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitSpurious = 3;
inline constexpr int kExitUndetermined = 4;

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace convdyn::cli
