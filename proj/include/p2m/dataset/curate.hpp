#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "p2m/core/manifest.hpp"
#include "p2m/dataset/emotion_map.hpp"
#include "p2m/dataset/synth.hpp"

namespace p2m::dataset {

struct CurationConfig {
  std::filesystem::path paintings_dir;
  std::filesystem::path painting_labels;  // defaults to <paintings_dir>/annotations.csv
  std::filesystem::path midi_dir;
  std::filesystem::path midi_labels;      // defaults to <midi_dir>/annotations.csv
  EmotionMap emotion_map = EmotionMap::mirex_default();
  std::filesystem::path out_dir;
  std::int64_t seed = 0;
  SplitRatios ratios;
  int sample_rate = kCanonicalSampleRate;
  double chunk_seconds = 30.0;
  int synth_rate = 44100;  // rate the synth renders at before resampling
  unsigned threads = 0;    // 0 = hardware concurrency
};

struct CurationResult {
  Manifest manifest;
  std::filesystem::path manifest_path;
  std::vector<std::filesystem::path> written_audio;
};

/// Two-column CSV rows ("path,<label>"); an optional header row whose first
/// cell is "path" is skipped. Paths are resolved against the CSV's directory.
std::vector<std::pair<std::filesystem::path, std::string>> read_label_csv(const std::filesystem::path& csv);

/// Render -> resample -> chunk -> map -> pair -> split, writing
/// <out>/audio/<midi-stem>_chunk<k>.wav and <out>/manifest.json.
CurationResult curate(const CurationConfig& config, const MidiSynthBackend& synth);

}  // namespace p2m::dataset
