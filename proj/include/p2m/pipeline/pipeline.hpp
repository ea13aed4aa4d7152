#pragma once

#include <filesystem>
#include <string>

#include "p2m/core/error.hpp"
#include "p2m/pipeline/config.hpp"

namespace p2m::pipeline {

/// A stage of the end-to-end flow failed.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what) : Error(what), stage_(std::move(stage)) {}
  [[nodiscard]] const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct RunOptions {
  std::filesystem::path image;
  std::filesystem::path music_checkpoint;
  std::filesystem::path classifier_checkpoint;  // empty: <checkpoints>/emotion.ckpt
  std::filesystem::path out_dir;                // empty: paths.output
  /// Explicit wav path; the provenance then sits next to it as
  /// <stem>.provenance.json.
  std::filesystem::path wav;
};

struct RunResult {
  std::filesystem::path wav;
  std::filesystem::path provenance;
  std::string provenance_json;
};

/// predict-emotion -> caption (not for emotive) -> prompt, LLM, parse
/// (lyrical and optimized) -> text selection -> generate. Writes
/// <out>/<image stem>.<variant>.wav and the matching .provenance.json.
/// Failures raise StageError naming the stage and image; partial outputs
/// are removed.
RunResult run_end_to_end(const RunOptions& opts, const PipelineConfig& cfg);

}  // namespace p2m::pipeline
