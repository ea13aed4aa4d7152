#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "p2m/core/emotion.hpp"

namespace p2m::text {

inline constexpr std::size_t kMaxTextChars = 512;

enum class CaptionSource { LabelOnly, Captioner };

std::string_view to_string(CaptionSource s);

struct Caption {
  std::string text;
  Emotion emotion = Emotion::Neutral;
  CaptionSource source = CaptionSource::Captioner;
};

/// Collapses whitespace to single spaces, trims, and caps at 512 bytes on a
/// UTF-8 boundary. Throws ValidationError when nothing is left.
Caption make_caption(std::string_view text, Emotion emotion, CaptionSource source);

struct PromptText {
  std::string system_message;
  std::string instruction;

  /// Plain-text rendering sent to completion-style backends.
  [[nodiscard]] std::string render() const;
  friend bool operator==(const PromptText&, const PromptText&) = default;
};

inline constexpr std::string_view kSystemMessage =
    "You are an enhanced description generator. You will be given with image description and you have to "
    "enhance those in musical terms.";
inline constexpr std::string_view kInstructionHead =
    "Generate a musical theme description for the following image description: ";
inline constexpr std::string_view kInstructionTail =
    " Include details like mood, genre, tempo, and melody in 2 lines.";

/// Straight double quotes inside the caption become typographic ones so the
/// quoted slot stays well formed.
PromptText build_prompt(const Caption& caption);

/// Recovers the caption from an instruction produced by build_prompt.
std::optional<std::string> caption_from_instruction(std::string_view instruction);

struct EnhancedDescription {
  std::string text;
  bool mood_terms_present = false;
};

/// Removes an echoed prompt (when `prompt` is given) and a leading
/// "Response:" label, keeps the first two sentences, collapses whitespace,
/// and caps the result at 512 bytes. Throws ValidationError when the
/// completion is unusable.
EnhancedDescription parse_llm_response(std::string_view raw, const PromptText* prompt = nullptr);

/// True when any word of the musical-term lexicon occurs in `text`.
bool has_mood_terms(std::string_view text);

/// Split into sentences: runs ending in '.', '!' or '?' followed by
/// whitespace or end of text. A trailing unterminated run is a sentence too.
std::vector<std::string> split_sentences(std::string_view text);

std::string collapse_whitespace(std::string_view text);

enum class Variant { Emotive, Narrative, Lyrical, Optimized };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view text);

struct SampleTexts {
  std::optional<Emotion> emotion;
  std::optional<std::string> caption;
  std::optional<std::string> enhanced_description;
};

/// emotive: "{emotion} song"; narrative: the caption; lyrical and optimized:
/// the enhanced description.
std::string text_for_variant(Variant v, const SampleTexts& sample);

/// "{emotion} song"
std::string emotive_text(Emotion e);

}  // namespace p2m::text
