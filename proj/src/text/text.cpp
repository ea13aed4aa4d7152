#include "p2m/text/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "p2m/core/error.hpp"

namespace p2m::text {

namespace {

constexpr std::string_view kLexicon[] = {
    // mood
    "melancholic", "melancholy", "joyful", "cheerful", "upbeat", "somber", "sombre", "uplifting", "dark", "bright",
    "calm", "serene", "aggressive", "playful", "energetic", "dreamy", "nostalgic", "peaceful", "tense", "mood",
    // genre
    "ballad", "pop", "rock", "jazz", "blues", "funk", "ambient", "classical", "folk", "waltz", "orchestral",
    "electronic", "genre",
    // tempo
    "tempo", "slow", "fast", "moderate", "allegro", "adagio", "andante", "bpm",
    // melody, harmony and key
    "melody", "melodic", "harmony", "chord", "chords", "minor", "major", "key", "rhythm", "groove",
    // instruments
    "piano", "guitar", "guitars", "violin", "strings", "drums", "bass", "synth", "cello", "flute", "brass"};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Largest prefix length <= max that does not split a UTF-8 sequence.
std::size_t utf8_cut(std::string_view s, std::size_t max) {
  if (s.size() <= max) return s.size();
  std::size_t cut = max;
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  return cut;
}

std::string cap_length(std::string text) {
  text.resize(utf8_cut(text, kMaxTextChars));
  while (!text.empty() && text.back() == ' ') text.pop_back();
  return text;
}

std::string replace_quotes(std::string_view s) {
  std::string out;
  bool open = true;
  for (char c : s) {
    if (c == '"') {
      out += open ? "“" : "”";
      open = !open;
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::size_t common_prefix(std::string_view a, std::string_view b) {
  std::size_t n = 0;
  while (n < a.size() && n < b.size() && a[n] == b[n]) ++n;
  return n;
}

std::string_view trim_left(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  return s;
}

// Echoes shorter than this are treated as coincidence.
constexpr std::size_t kMinEcho = 24;

}  // namespace

std::string_view to_string(CaptionSource s) { return s == CaptionSource::LabelOnly ? "label_only" : "captioner"; }

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending = false;
  for (char c : text) {
    if (is_space(c)) {
      pending = !out.empty();
    } else {
      if (pending) out.push_back(' ');
      pending = false;
      out.push_back(c);
    }
  }
  return out;
}

Caption make_caption(std::string_view text, Emotion emotion, CaptionSource source) {
  std::string t = cap_length(collapse_whitespace(text));
  if (t.empty()) throw ValidationError("caption text is empty");
  return {std::move(t), emotion, source};
}

std::string PromptText::render() const {
  return "### System:\n" + system_message + "\n\n### Instruction:\n" + instruction + "\n\n### Response:\n";
}

PromptText build_prompt(const Caption& caption) {
  if (collapse_whitespace(caption.text).empty()) throw ValidationError("cannot build a prompt from an empty caption");
  PromptText p;
  p.system_message = std::string(kSystemMessage);
  p.instruction = std::string(kInstructionHead) + "\"" + replace_quotes(caption.text) + "\"." +
                  std::string(kInstructionTail);
  return p;
}

std::optional<std::string> caption_from_instruction(std::string_view instruction) {
  const std::string head = std::string(kInstructionHead) + "\"";
  const std::string tail = "\"." + std::string(kInstructionTail);
  if (instruction.size() < head.size() + tail.size()) return std::nullopt;
  if (instruction.substr(0, head.size()) != head) return std::nullopt;
  if (instruction.substr(instruction.size() - tail.size()) != tail) return std::nullopt;
  return std::string(instruction.substr(head.size(), instruction.size() - head.size() - tail.size()));
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = i + 1;
    while (j < text.size() && (text[j] == '.' || text[j] == '!' || text[j] == '?')) ++j;
    if (j == text.size() || is_space(text[j])) {
      const auto s = collapse_whitespace(text.substr(start, j - start));
      if (!s.empty()) out.push_back(s);
      start = j;
    }
    i = j - 1;
  }
  const auto rest = collapse_whitespace(text.substr(std::min(start, text.size())));
  if (!rest.empty()) out.push_back(rest);
  return out;
}

bool has_mood_terms(std::string_view text) {
  const std::string t = lower(text);
  std::size_t i = 0;
  while (i < t.size()) {
    while (i < t.size() && !std::isalpha(static_cast<unsigned char>(t[i]))) ++i;
    std::size_t j = i;
    while (j < t.size() && (std::isalpha(static_cast<unsigned char>(t[j])) || t[j] == '-')) ++j;
    if (j > i) {
      const std::string_view word(t.data() + i, j - i);
      if (std::find(std::begin(kLexicon), std::end(kLexicon), word) != std::end(kLexicon)) return true;
    }
    i = j;
  }
  return false;
}

EnhancedDescription parse_llm_response(std::string_view raw, const PromptText* prompt) {
  std::string_view body = trim_left(raw);
  if (prompt != nullptr) {
    const std::string candidates[] = {prompt->render(), prompt->system_message + "\n" + prompt->instruction,
                                      prompt->system_message + " " + prompt->instruction, prompt->instruction};
    std::size_t best = 0;
    for (const auto& c : candidates) {
      const std::size_t n = common_prefix(body, c);
      if (n == c.size() || n >= kMinEcho) best = std::max(best, n);
    }
    body = trim_left(body.substr(best));
  }
  for (std::string_view label : {"### Response:", "Response:"}) {
    if (body.size() >= label.size() && lower(body.substr(0, label.size())) == lower(label)) {
      body = trim_left(body.substr(label.size()));
      break;
    }
  }
  const auto sentences = split_sentences(body);
  std::string joined;
  for (std::size_t i = 0; i < sentences.size() && i < 2; ++i) {
    if (!joined.empty()) joined.push_back(' ');
    joined += sentences[i];
  }
  joined = cap_length(std::move(joined));
  if (joined.empty()) throw ValidationError("unusable completion: nothing left after removing the prompt echo");
  EnhancedDescription d;
  d.mood_terms_present = has_mood_terms(joined);
  d.text = std::move(joined);
  return d;
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Emotive: return "emotive";
    case Variant::Narrative: return "narrative";
    case Variant::Lyrical: return "lyrical";
    case Variant::Optimized: return "optimized";
  }
  return "?";
}

Variant parse_variant(std::string_view text) {
  const std::string t = lower(text);
  for (Variant v : {Variant::Emotive, Variant::Narrative, Variant::Lyrical, Variant::Optimized}) {
    if (t == to_string(v)) return v;
  }
  throw ValidationError("unknown variant \"" + std::string(text) + "\"; expected emotive, narrative, lyrical or optimized");
}

std::string emotive_text(Emotion e) { return std::string(to_string(e)) + " song"; }

std::string text_for_variant(Variant v, const SampleTexts& sample) {
  switch (v) {
    case Variant::Emotive:
      if (!sample.emotion) throw ValidationError("emotive variant requires an emotion label");
      return emotive_text(*sample.emotion);
    case Variant::Narrative:
      if (!sample.caption || collapse_whitespace(*sample.caption).empty()) {
        throw ValidationError("narrative variant requires a caption");
      }
      return *sample.caption;
    case Variant::Lyrical:
    case Variant::Optimized:
      if (!sample.enhanced_description || collapse_whitespace(*sample.enhanced_description).empty()) {
        throw ValidationError(std::string(to_string(v)) + " variant requires an enhanced description");
      }
      return *sample.enhanced_description;
  }
  throw ValidationError("invalid variant");
}

}  // namespace p2m::text
