#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "p2m/emotion/classifier.hpp"
#include "p2m/generation/codec.hpp"
#include "p2m/generation/harness.hpp"
#include "p2m/metrics/backends.hpp"
#include "p2m/text/backends.hpp"

namespace p2m::pipeline {

/// Registry entry. kind is "toy", "command" (locator = command line) or
/// "http" (locator = URL, LLM role only).
struct BackendSpec {
  std::string kind = "toy";
  std::string locator;
  double timeout_seconds = 60.0;
  int retries = 2;
};

/// Roles the pipeline needs, each naming a registry entry.
inline constexpr const char* kRoles[] = {"captioner", "llm",      "codec", "text_encoder",
                                         "embedder",  "audio_classifier", "clap"};

struct PipelinePaths {
  std::filesystem::path manifest;
  std::filesystem::path cache;
  std::filesystem::path checkpoints;
  std::filesystem::path output;
};

struct PipelineConfig {
  std::map<std::string, BackendSpec> backends;
  std::map<std::string, std::string> roles;  // role -> backend name
  PipelinePaths paths;
  text::Variant variant = text::Variant::Optimized;
  gen::TrainingConfig training;
  std::optional<gen::FreezePolicy> freeze_policy;  // unset: per-variant default
  gen::SamplingConfig sampling;
  emotion::ClassifierConfig classifier;
  emotion::ClassifierTrainConfig classifier_training;
  gen::ToyMusicLmConfig music_model;
  std::uint64_t seed = 0;
  std::string canonical;  // canonical JSON of the resolved document

  /// Every role resolves to an existing registry entry; the variant is set.
  void validate() const;
  [[nodiscard]] const BackendSpec& backend_for(const std::string& role) const;
  [[nodiscard]] std::string backend_name(const std::string& role) const;
  [[nodiscard]] gen::FreezePolicy effective_freeze_policy() const;
  /// SHA-256 of `canonical`.
  [[nodiscard]] std::string hash() const;
  /// Applies --seed: config seed, sampling seed and training seeds.
  void override_seed(std::uint64_t s);
};

/// Defaults: every role bound to a "toy" entry, paths under the working
/// directory.
PipelineConfig default_config();

/// JSON document; relative paths resolve against the file's directory.
/// P2M_CACHE_ROOT, when set, replaces paths.cache.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir,
                            std::string_view origin = "<memory>");

/// Backend factories driven by the registry.
std::unique_ptr<text::CaptionBackend> make_captioner(const PipelineConfig& cfg, const std::string& name);
std::unique_ptr<text::LlmBackend> make_llm(const PipelineConfig& cfg, const std::string& name);
std::unique_ptr<gen::AudioTokenizer> make_codec(const PipelineConfig& cfg);
std::unique_ptr<gen::TextEncoder> make_text_encoder(const PipelineConfig& cfg);
std::unique_ptr<metrics::AudioEmbedder> make_embedder(const PipelineConfig& cfg, const std::string& name);
std::unique_ptr<metrics::AudioClassifier> make_audio_classifier(const PipelineConfig& cfg, const std::string& name);
std::unique_ptr<metrics::ClapModel> make_clap(const PipelineConfig& cfg, const std::string& name);

}  // namespace p2m::pipeline
