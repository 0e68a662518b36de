#pragma once

#include <iosfwd>

namespace drm::cli {

// Exit codes shared by every subcommand.
inline constexpr int kOk = 0;
inline constexpr int kBadInput = 1;
inline constexpr int kNotConverged = 2;
inline constexpr int kOracleNotConverged = 3;
inline constexpr int kVerifyFailed = 4;

/// Entry point of the drmarket tool. Output and diagnostics go to the given
/// streams so the commands can be driven in-process.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace drm::cli
