#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>

#include "p2m/image/image.hpp"
#include "p2m/text/text.hpp"

namespace p2m::text {

struct CaptionRequest {
  const Image& image;
  std::filesystem::path image_path;  // may be empty
  std::string prefix;                // "a {emotion} painting of"
};

class CaptionBackend {
 public:
  virtual ~CaptionBackend() = default;
  [[nodiscard]] virtual std::string id() const = 0;
  /// False when calls must be serialised by the caller.
  [[nodiscard]] virtual bool concurrent_safe() const { return true; }
  [[nodiscard]] virtual std::string caption(const CaptionRequest& request) const = 0;
};

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  [[nodiscard]] virtual std::string id() const = 0;
  [[nodiscard]] virtual bool concurrent_safe() const { return true; }
  [[nodiscard]] virtual std::string complete(const PromptText& prompt) const = 0;
};

/// "a {emotion} scene with {adjective} {noun}", both words picked by the
/// pixel hash. The emotion comes from the conditioning prefix.
class ToyCaptioner final : public CaptionBackend {
 public:
  [[nodiscard]] std::string id() const override { return "toy-captioner"; }
  [[nodiscard]] std::string caption(const CaptionRequest& request) const override;
};

/// Maps the first emotion word in the quoted caption to a fixed phrase.
class ToyLlm final : public LlmBackend {
 public:
  [[nodiscard]] std::string id() const override { return "toy-llm"; }
  [[nodiscard]] std::string complete(const PromptText& prompt) const override;
  static std::string phrase_for(Emotion e);
};

/// External program. Captioner: invoked as `<command> <image path> <prefix>`;
/// the image is written to a temporary PNG when no path is known. LLM: the
/// rendered prompt goes to stdin. Stdout is the result; a nonzero exit is a
/// failure.
class CommandCaptioner final : public CaptionBackend {
 public:
  CommandCaptioner(std::string command, std::chrono::milliseconds timeout);
  [[nodiscard]] std::string id() const override { return "command:" + command_; }
  [[nodiscard]] std::string caption(const CaptionRequest& request) const override;

 private:
  std::string command_;
  std::chrono::milliseconds timeout_;
};

class CommandLlm final : public LlmBackend {
 public:
  CommandLlm(std::string command, std::chrono::milliseconds timeout);
  [[nodiscard]] std::string id() const override { return "command:" + command_; }
  [[nodiscard]] std::string complete(const PromptText& prompt) const override;

 private:
  std::string command_;
  std::chrono::milliseconds timeout_;
};

/// POSTs {"system", "instruction", "prompt"} as JSON to an http:// URL and
/// reads {"text": ...} (or the raw body when it is not JSON).
class HttpLlm final : public LlmBackend {
 public:
  HttpLlm(std::string url, std::chrono::milliseconds timeout);
  [[nodiscard]] std::string id() const override { return "http:" + url_; }
  [[nodiscard]] std::string complete(const PromptText& prompt) const override;

 private:
  std::string url_;
  std::chrono::milliseconds timeout_;
};

/// "a {emotion} painting of"
std::string conditioning_prefix(Emotion e);

/// Captions `image` conditioned on `emotion`. When the backend output does
/// not mention the emotion, the conditioning prefix is prepended. Backend
/// failures are rethrown as BackendError naming `image_id`.
Caption caption_image(const CaptionBackend& backend, const Image& image, Emotion emotion,
                      const std::string& image_id = {}, const std::filesystem::path& image_path = {});

/// Raw completion with up to `retries` further attempts after a
/// BackendError.
std::string enhance_description(const LlmBackend& backend, const PromptText& prompt, int retries = 2);

}  // namespace p2m::text
