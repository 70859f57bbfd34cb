#pragma once

#include <iosfwd>

namespace sigpal::cli {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalidInput = 2;
inline constexpr int kExitEngineFailure = 3;

/// Entry point of the `sigpal` executable: subcommands test, simulate and theory.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sigpal::cli
