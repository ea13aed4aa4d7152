#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "p2m/core/manifest.hpp"

namespace p2m::dataset {

struct PaintingSource {
  std::filesystem::path path;
  Emotion emotion = Emotion::Neutral;
};

struct ClipRef {
  std::string audio_path;
  Emotion emotion = Emotion::Neutral;
};

struct PairingResult {
  std::vector<PairedSample> samples;  // sorted by id
  bool clip_reuse = false;            // some emotion had fewer clips than paintings
};

/// Sample id for a painting: its file stem.
std::string painting_id(const std::filesystem::path& path);

/// Pairs every painting with a same-emotion clip. Per emotion the clips are
/// sorted, shuffled with a seed derived from (seed, emotion), and handed to
/// the id-sorted paintings in order, wrapping around round-robin once
/// exhausted. Throws ValidationError when an emotion has paintings but no
/// clips, or when two paintings share an id.
PairingResult pair_by_emotion(const std::vector<PaintingSource>& paintings, const std::vector<ClipRef>& clips,
                              std::int64_t seed);

}  // namespace p2m::dataset
