#include "p2m/pipeline/run_log.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fcntl.h>
#include <nlohmann/json.hpp>
#include <sys/file.h>
#include <unistd.h>

#include "p2m/core/error.hpp"
#include "p2m/core/hash.hpp"

namespace p2m::pipeline {

namespace {

void hash_into(std::map<std::string, std::string>& out, const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) {
    for (const auto& e : std::filesystem::recursive_directory_iterator(path)) {
      if (e.is_regular_file()) out[e.path().string()] = sha256_file(e.path());
    }
  } else if (std::filesystem::exists(path)) {
    out[path.string()] = sha256_file(path);
  }
}

}  // namespace

void RunRecord::add_input(const std::filesystem::path& path) { hash_into(inputs, path); }
void RunRecord::add_output(const std::filesystem::path& path) { hash_into(outputs, path); }

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  ::gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::filesystem::path run_log_path(const std::filesystem::path& dir) {
  if (const char* env = std::getenv("P2M_RUN_LOG"); env != nullptr && *env != '\0') return env;
  return dir / "runs.jsonl";
}

void append_run_record(const std::filesystem::path& log, const RunRecord& r) {
  const nlohmann::json j = {{"command", r.command},         {"config_hash", r.config_hash},
                            {"inputs", r.inputs},           {"outputs", r.outputs},
                            {"started_at", r.started_at},   {"finished_at", r.finished_at},
                            {"tool_version", r.tool_version}};
  const std::string line = j.dump() + "\n";
  std::error_code ec;
  if (log.has_parent_path()) std::filesystem::create_directories(log.parent_path(), ec);
  const int fd = ::open(log.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw IoError("cannot open run log " + log.string());
  ::flock(fd, LOCK_EX);
  std::size_t done = 0;
  bool ok = true;
  while (done < line.size()) {
    const ssize_t n = ::write(fd, line.data() + done, line.size() - done);
    if (n <= 0) {
      ok = false;
      break;
    }
    done += static_cast<std::size_t>(n);
  }
  ::flock(fd, LOCK_UN);
  ::close(fd);
  if (!ok) throw IoError("failed to append to run log " + log.string());
}

}  // namespace p2m::pipeline
