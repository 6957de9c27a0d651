#pragma once

#include <iosfwd>

namespace slidegen::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;    // bad input or config
inline constexpr int kExitFailure = 2;  // pipeline or backend failure

/// Entry point for the `slidegen` tool; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace slidegen::cli
