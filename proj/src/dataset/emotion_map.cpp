#include "p2m/dataset/emotion_map.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "p2m/core/error.hpp"

namespace p2m::dataset {

EmotionMap EmotionMap::mirex_default() {
  return EmotionMap{{{"cluster_1", Emotion::Happy},
                     {"cluster_2", Emotion::Fun},
                     {"cluster_3", Emotion::Sad},
                     {"cluster_4", Emotion::Neutral},
                     {"cluster_5", Emotion::Angry}}};
}

EmotionMap EmotionMap::identity() {
  EmotionMap m;
  for (Emotion e : kAllEmotions) m.entries.emplace(std::string(to_string(e)), e);
  return m;
}

EmotionMap EmotionMap::parse(std::string_view json_text, std::string_view origin) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string(origin) + ": malformed emotion map: " + e.what());
  }
  if (!doc.is_object() || doc.empty()) {
    throw ValidationError(std::string(origin) + ": emotion map must be a non-empty JSON object");
  }
  EmotionMap m;
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_string()) {
      throw ValidationError(std::string(origin) + ": cluster \"" + key + "\" must map to an emotion string");
    }
    auto e = try_parse_emotion(value.get<std::string>());
    if (!e) {
      throw ValidationError(std::string(origin) + ": cluster \"" + key + "\" maps to unknown emotion \"" +
                            value.get<std::string>() + "\"; expected one of: " + legal_emotion_list());
    }
    m.entries.emplace(key, *e);
  }
  return m;
}

EmotionMap EmotionMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open emotion map " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

Emotion map_cluster(std::string_view label, const EmotionMap& map) {
  if (auto it = map.entries.find(std::string(label)); it != map.entries.end()) return it->second;
  std::string keys;
  for (const auto& [k, v] : map.entries) {
    if (!keys.empty()) keys += ", ";
    keys += k;
  }
  throw ValidationError("unmapped source cluster \"" + std::string(label) + "\"; mapped clusters: " + keys);
}

}  // namespace p2m::dataset
