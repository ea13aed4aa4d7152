#pragma once

#include <chrono>
#include <string>
#include <vector>

namespace p2m {

struct CommandResult {
  int exit_code = 0;
  std::string out;
  std::string err;
};

/// Runs argv[0] (PATH lookup) with `input` on stdin and collects stdout and
/// stderr. Throws BackendError when the process cannot start or exceeds
/// `timeout`; the child is killed in that case.
CommandResult run_command(const std::vector<std::string>& argv, const std::string& input,
                          std::chrono::milliseconds timeout);

/// Splits on whitespace; single and double quotes group words.
std::vector<std::string> split_command_line(const std::string& line);

}  // namespace p2m
