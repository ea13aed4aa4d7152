#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "p2m/core/emotion.hpp"

namespace p2m::dataset {

/// Source-taxonomy cluster name -> one of the five labels.
struct EmotionMap {
  std::map<std::string, Emotion> entries;

  /// MIREX mood clusters: 1 (rousing, confident) -> happy, 2 (cheerful, fun)
  /// -> fun, 3 (wistful, brooding) -> sad, 4 (whimsical, wry) -> neutral,
  /// 5 (aggressive, fiery) -> angry. Keys are "cluster_1" .. "cluster_5".
  static EmotionMap mirex_default();

  /// Identity map over the five label names.
  static EmotionMap identity();

  /// JSON object {"cluster": "emotion", ...}.
  static EmotionMap load(const std::filesystem::path& path);
  static EmotionMap parse(std::string_view json_text, std::string_view origin = "<memory>");
};

/// Throws ValidationError listing the legal keys when `label` is unmapped.
Emotion map_cluster(std::string_view label, const EmotionMap& map);

}  // namespace p2m::dataset
