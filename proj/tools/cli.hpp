#pragma once

#include <iosfwd>

namespace embedkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `embedkit` tool. Reports go to `out` unless an output
/// path is given; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace embedkit::cli
