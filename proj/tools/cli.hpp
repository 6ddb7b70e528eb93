#pragma once

#include <ostream>

namespace satbench::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `satbench` binary with injectable output streams.
/// Every failure writes one JSON line {"error": kind, "message": ...} to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace satbench::cli
