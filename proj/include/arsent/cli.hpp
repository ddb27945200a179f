#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace arsent {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDetected = 1;
inline constexpr int kExitError = 2;

/// Entry point of the `arsent` tool: synth, detect {obstruction|vim}, eval, serve.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace arsent
