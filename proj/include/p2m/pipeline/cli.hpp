#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace p2m::pipeline {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Parses `args` (without the program name) and runs one subcommand:
/// curate, train-emotion, predict-emotion, caption, enhance, precompute,
/// finetune, generate, evaluate, run. Returns 0 on success, 1 on usage
/// errors, 2 on runtime errors.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace p2m::pipeline
