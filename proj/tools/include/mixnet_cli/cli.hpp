#pragma once

#include <iosfwd>

namespace mixnet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point of the `mixnet` tool. Subcommands: synth, denoise, sr, csi,
/// unmix, metrics, sweep, convert.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mixnet::cli
