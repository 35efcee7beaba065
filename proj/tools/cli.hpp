#pragma once

#include <iosfwd>

namespace rpsim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitConfig = 2;

/// Entry point of the `rpsim` tool. Never throws; every failure maps to an exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rpsim::cli
