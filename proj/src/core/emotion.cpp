#include "p2m/core/emotion.hpp"

#include <algorithm>
#include <cctype>

#include "p2m/core/error.hpp"

namespace p2m {

std::string_view to_string(Emotion e) {
  switch (e) {
    case Emotion::Happy: return "happy";
    case Emotion::Angry: return "angry";
    case Emotion::Sad: return "sad";
    case Emotion::Fun: return "fun";
    case Emotion::Neutral: return "neutral";
  }
  return "neutral";
}

std::optional<Emotion> try_parse_emotion(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Emotion e : kAllEmotions) {
    if (lower == to_string(e)) return e;
  }
  return std::nullopt;
}

Emotion parse_emotion(std::string_view text) {
  if (auto e = try_parse_emotion(text)) return *e;
  throw ValidationError("unknown emotion \"" + std::string(text) + "\"; expected one of: " +
                        legal_emotion_list());
}

std::string legal_emotion_list() {
  std::string out;
  for (Emotion e : kAllEmotions) {
    if (!out.empty()) out += ", ";
    out += to_string(e);
  }
  return out;
}

}  // namespace p2m
