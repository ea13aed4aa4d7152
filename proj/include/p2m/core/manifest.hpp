#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "p2m/core/emotion.hpp"

namespace p2m {

enum class Split { Train, Eval, Test };

std::string_view to_string(Split s);
Split parse_split(std::string_view text);

/// Train/eval/test fractions. Each in [0, 1]; they sum to 1 within 1e-9.
struct SplitRatios {
  double train = 0.8;
  double eval = 0.1;
  double test = 0.1;

  /// Throws ValidationError when the invariant does not hold.
  void validate() const;

  /// Parses "0.8,0.1,0.1".
  static SplitRatios parse(std::string_view text);

  friend bool operator==(const SplitRatios&, const SplitRatios&) = default;
};

/// One painting joined to one music clip.
struct PairedSample {
  std::string id;
  std::string image_path;  // relative to the manifest directory
  std::string audio_path;  // relative to the manifest directory
  Emotion emotion = Emotion::Neutral;
  Split split = Split::Train;
  std::optional<std::string> caption;
  std::optional<std::string> enhanced_description;

  friend bool operator==(const PairedSample&, const PairedSample&) = default;
};

struct Manifest {
  std::string version = "1";
  int sample_rate = 32000;
  double chunk_seconds = 30.0;
  std::int64_t seed = 0;
  std::vector<PairedSample> samples;
  // Optional extensions. `ratios` enables split-proportion validation;
  // `clip_reuse` records that pairing had to reuse clips across paintings.
  std::optional<SplitRatios> ratios;
  bool clip_reuse = false;

  [[nodiscard]] const PairedSample* find(std::string_view id) const;
  [[nodiscard]] std::vector<const PairedSample*> in_split(Split s) const;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// Checks every Manifest invariant; throws ValidationError naming the
/// offending sample id or field.
void validate_manifest(const Manifest& m);

/// Parses manifest JSON text. `origin` is used in error messages.
Manifest parse_manifest(std::string_view json_text, std::string_view origin = "<memory>");

/// Reads and validates a manifest file.
Manifest load_manifest(const std::filesystem::path& path);

/// Canonical form: sorted keys, two-space indent, UTF-8, trailing newline.
std::string to_canonical_json(const Manifest& m);

/// Validates, then writes the canonical form.
void save_manifest(const Manifest& m, const std::filesystem::path& path);

}  // namespace p2m
