#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace p2m::pipeline {

struct RunRecord {
  std::string command;
  std::string config_hash;
  std::map<std::string, std::string> inputs;   // path -> sha256
  std::map<std::string, std::string> outputs;  // path -> sha256
  std::string started_at;                      // UTC, ISO 8601
  std::string finished_at;
  std::string tool_version = P2M_VERSION;

  /// Hashes `path` (a file, or every regular file below a directory).
  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
};

std::string utc_now();

/// $P2M_RUN_LOG when set, otherwise <dir>/runs.jsonl.
std::filesystem::path run_log_path(const std::filesystem::path& dir);

/// Appends one JSON line under an exclusive flock.
void append_run_record(const std::filesystem::path& log, const RunRecord& record);

}  // namespace p2m::pipeline
