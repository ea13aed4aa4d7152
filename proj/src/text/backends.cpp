#include "p2m/text/backends.hpp"

#include <cctype>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>
#include <unistd.h>

#include "p2m/core/error.hpp"
#include "p2m/core/hash.hpp"
#include "p2m/core/subprocess.hpp"

namespace p2m::text {

namespace {

constexpr std::string_view kAdjectives[] = {"quiet", "weathered", "luminous", "crowded",
                                            "distant", "golden", "shadowed", "windswept"};
constexpr std::string_view kNouns[] = {"figures", "houses", "boats", "trees", "hills", "flowers", "streets", "clouds"};

struct Synonym {
  std::string_view word;
  Emotion emotion;
};

constexpr Synonym kSynonyms[] = {
    {"happy", Emotion::Happy},      {"joyful", Emotion::Happy},     {"cheerful", Emotion::Happy},
    {"angry", Emotion::Angry},      {"furious", Emotion::Angry},    {"sad", Emotion::Sad},
    {"sorrowful", Emotion::Sad},    {"melancholic", Emotion::Sad},  {"fun", Emotion::Fun},
    {"playful", Emotion::Fun},      {"neutral", Emotion::Neutral},  {"calm", Emotion::Neutral},
};

std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::optional<Emotion> first_emotion_word(std::string_view text) {
  for (const auto& w : words_of(text)) {
    for (const auto& s : kSynonyms) {
      if (w == s.word) return s.emotion;
    }
  }
  return std::nullopt;
}

std::string checked_stdout(const std::vector<std::string>& argv, const std::string& input,
                           std::chrono::milliseconds timeout) {
  auto r = run_command(argv, input, timeout);
  if (r.exit_code != 0) {
    throw BackendError("command '" + argv[0] + "' exited with status " + std::to_string(r.exit_code) +
                       (r.err.empty() ? "" : ": " + collapse_whitespace(r.err)));
  }
  return r.out;
}

}  // namespace

std::string conditioning_prefix(Emotion e) { return "a " + std::string(to_string(e)) + " painting of"; }

std::string ToyCaptioner::caption(const CaptionRequest& request) const {
  const auto words = words_of(request.prefix);
  std::optional<Emotion> emotion;
  if (words.size() >= 2) emotion = try_parse_emotion(words[1]);
  if (!emotion) throw BackendError("toy captioner: cannot read an emotion from prefix \"" + request.prefix + "\"");
  const std::uint64_t h = fnv1a64(pixel_hash(request.image));
  const auto adjective = kAdjectives[h % std::size(kAdjectives)];
  const auto noun = kNouns[(h >> 8) % std::size(kNouns)];
  return "a " + std::string(to_string(*emotion)) + " scene with " + std::string(adjective) + " " + std::string(noun);
}

std::string ToyLlm::phrase_for(Emotion e) {
  switch (e) {
    case Emotion::Happy:
      return "A bright pop tune in a major key, fast tempo, with a bouncing melody.";
    case Emotion::Angry:
      return "An aggressive rock track with distorted guitars, fast tempo, with a driving dissonant melody.";
    case Emotion::Sad:
      return "A melancholic piano ballad in a minor key, slow tempo, with a descending melody.";
    case Emotion::Fun:
      return "A playful funk groove with brass and slap bass, medium tempo, with a syncopated melody.";
    case Emotion::Neutral:
      return "A calm ambient piece with soft synth pads, moderate tempo, with a gently flowing melody.";
  }
  return {};
}

std::string ToyLlm::complete(const PromptText& prompt) const {
  const auto caption = caption_from_instruction(prompt.instruction);
  const auto emotion = first_emotion_word(caption ? std::string_view(*caption) : std::string_view(prompt.instruction));
  return phrase_for(emotion.value_or(Emotion::Neutral));
}

CommandCaptioner::CommandCaptioner(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
  if (split_command_line(command_).empty()) throw ValidationError("captioner command is empty");
}

std::string CommandCaptioner::caption(const CaptionRequest& request) const {
  auto argv = split_command_line(command_);
  std::filesystem::path path = request.image_path;
  std::filesystem::path temp;
  if (path.empty()) {
    temp = std::filesystem::temp_directory_path() /
           ("p2m-caption-" + std::to_string(::getpid()) + "-" + pixel_hash(request.image).substr(0, 16) + ".png");
    save_png(request.image, temp);
    path = temp;
  }
  argv.push_back(path.string());
  argv.push_back(request.prefix);
  try {
    auto out = checked_stdout(argv, {}, timeout_);
    if (!temp.empty()) std::filesystem::remove(temp);
    return out;
  } catch (...) {
    if (!temp.empty()) std::filesystem::remove(temp);
    throw;
  }
}

CommandLlm::CommandLlm(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
  if (split_command_line(command_).empty()) throw ValidationError("LLM command is empty");
}

std::string CommandLlm::complete(const PromptText& prompt) const {
  return checked_stdout(split_command_line(command_), prompt.render(), timeout_);
}

HttpLlm::HttpLlm(std::string url, std::chrono::milliseconds timeout) : url_(std::move(url)), timeout_(timeout) {
  if (url_.rfind("http://", 0) != 0) throw ValidationError("LLM endpoint must be an http:// URL: " + url_);
}

std::string HttpLlm::complete(const PromptText& prompt) const {
  const std::string rest = url_.substr(7);
  const auto slash = rest.find('/');
  const std::string host = rest.substr(0, slash);
  const std::string path = slash == std::string::npos ? "/" : rest.substr(slash);
  httplib::Client client("http://" + host);
  const auto secs = timeout_.count() / 1000;
  const auto usecs = (timeout_.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  const nlohmann::json body = {
      {"system", prompt.system_message}, {"instruction", prompt.instruction}, {"prompt", prompt.render()}};
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) throw BackendError("LLM endpoint " + url_ + ": " + httplib::to_string(res.error()));
  if (res->status != 200) throw BackendError("LLM endpoint " + url_ + " returned HTTP " + std::to_string(res->status));
  const auto parsed = nlohmann::json::parse(res->body, nullptr, false);
  if (parsed.is_object() && parsed.contains("text") && parsed["text"].is_string()) {
    return parsed["text"].get<std::string>();
  }
  return res->body;
}

Caption caption_image(const CaptionBackend& backend, const Image& image, Emotion emotion, const std::string& image_id,
                      const std::filesystem::path& image_path) {
  const std::string prefix = conditioning_prefix(emotion);
  const std::string who = image_id.empty() ? std::string("image") : "image " + image_id;
  std::string raw;
  try {
    raw = backend.caption({image, image_path, prefix});
  } catch (const Error& e) {
    throw BackendError("captioner " + backend.id() + " failed on " + who + ": " + e.what());
  }
  std::string text = collapse_whitespace(raw);
  const auto words = words_of(text);
  const std::string label(to_string(emotion));
  if (std::find(words.begin(), words.end(), label) == words.end()) text = prefix + " " + text;
  try {
    return make_caption(text, emotion, CaptionSource::Captioner);
  } catch (const ValidationError& e) {
    throw BackendError("captioner " + backend.id() + " produced no caption for " + who);
  }
}

std::string enhance_description(const LlmBackend& backend, const PromptText& prompt, int retries) {
  if (retries < 0) throw ValidationError("retries must be >= 0");
  std::string last;
  for (int attempt = 0; attempt <= retries; ++attempt) {
    try {
      return backend.complete(prompt);
    } catch (const BackendError& e) {
      last = e.what();
      spdlog::warn("LLM backend {} attempt {}/{} failed: {}", backend.id(), attempt + 1, retries + 1, last);
    }
  }
  throw BackendError("LLM backend " + backend.id() + " failed after " + std::to_string(retries + 1) +
                     " attempts: " + last);
}

}  // namespace p2m::text
