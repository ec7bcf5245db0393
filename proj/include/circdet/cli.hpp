#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace circdet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

/// Entry point of the `circdet` tool. args[0] is the program name.
/// Subcommands: build-targets, decode, nms, augment, evaluate, bench-nms,
/// selfcheck. Returns 0 on success, 1 on validation errors (including unknown
/// subcommands and bad flags), 2 on I/O errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace circdet::cli
