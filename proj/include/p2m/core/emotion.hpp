#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace p2m {

// Order is significant: it is the class order of every 5-way distribution
// and the tie-break order of argmax.
enum class Emotion : int { Happy = 0, Angry = 1, Sad = 2, Fun = 3, Neutral = 4 };

inline constexpr std::size_t kNumEmotions = 5;

inline constexpr std::array<Emotion, kNumEmotions> kAllEmotions = {
    Emotion::Happy, Emotion::Angry, Emotion::Sad, Emotion::Fun, Emotion::Neutral};

/// Lowercase canonical name ("happy", "angry", ...).
std::string_view to_string(Emotion e);

/// Case-insensitive parse; returns nullopt for anything outside the five labels.
std::optional<Emotion> try_parse_emotion(std::string_view text);

/// Like try_parse_emotion but throws ValidationError listing the legal labels.
Emotion parse_emotion(std::string_view text);

/// "happy, angry, sad, fun, neutral"
std::string legal_emotion_list();

inline std::size_t index_of(Emotion e) { return static_cast<std::size_t>(e); }

}  // namespace p2m
