#pragma once

#include <iosfwd>

namespace carts::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailedJobs = 1;
inline constexpr int kExitUsage = 2;

/// Entry point for the `carts` tool: subcommands run, simulate and validate.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace carts::cli
