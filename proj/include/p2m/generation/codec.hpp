#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "p2m/core/waveform.hpp"
#include "p2m/generation/tokens.hpp"

namespace p2m::gen {

class AudioTokenizer {
 public:
  virtual ~AudioTokenizer() = default;
  [[nodiscard]] virtual std::string id() const = 0;
  [[nodiscard]] virtual int sample_rate() const = 0;
  [[nodiscard]] virtual int codebooks() const = 0;
  [[nodiscard]] virtual int codebook_size() const = 0;
  [[nodiscard]] virtual double frame_rate() const = 0;
  [[nodiscard]] virtual TokenGrid encode(const Waveform& w) const = 0;
  [[nodiscard]] virtual Waveform decode(const TokenGrid& grid) const = 0;
};

/// Two codebooks of 64 codes at 10 frames/s over 32 kHz audio. Codebook 0
/// quantises frame RMS on [0, 1], codebook 1 the zero-crossing rate on
/// [0, 0.5]. Decoding renders a tone at the frequency implied by the crossing
/// rate, rescaled per frame to the quantised RMS (a square wave when a sine
/// would clip). T = round(samples / 3200); a partial last frame uses the
/// samples it has.
class ToyCodec final : public AudioTokenizer {
 public:
  static constexpr int kCodebooks = 2;
  static constexpr int kCodebookSize = 64;
  static constexpr double kFrameRate = 10.0;

  [[nodiscard]] std::string id() const override { return "toy-codec-v1"; }
  [[nodiscard]] int sample_rate() const override { return kCanonicalSampleRate; }
  [[nodiscard]] int codebooks() const override { return kCodebooks; }
  [[nodiscard]] int codebook_size() const override { return kCodebookSize; }
  [[nodiscard]] double frame_rate() const override { return kFrameRate; }
  [[nodiscard]] TokenGrid encode(const Waveform& w) const override;
  [[nodiscard]] Waveform decode(const TokenGrid& grid) const override;

  [[nodiscard]] static int frame_samples() { return static_cast<int>(kCanonicalSampleRate / kFrameRate); }
  /// RMS represented by a codebook-0 code.
  [[nodiscard]] static double rms_of_code(int code) { return code / static_cast<double>(kCodebookSize - 1); }
};

class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  [[nodiscard]] virtual std::string id() const = 0;
  [[nodiscard]] virtual int dim() const = 0;
  /// One row per token. Throws ValidationError for text without tokens.
  [[nodiscard]] virtual EmbeddingSeq encode(std::string_view text) const = 0;
};

/// Lowercased alphanumeric words, each mapped to a fixed pseudo-random
/// 16-dim vector seeded by its hash, plus a sinusoidal position term.
class ToyTextEncoder final : public TextEncoder {
 public:
  static constexpr int kDim = 16;
  [[nodiscard]] std::string id() const override { return "toy-hash-text-v1"; }
  [[nodiscard]] int dim() const override { return kDim; }
  [[nodiscard]] EmbeddingSeq encode(std::string_view text) const override;
};

/// Registry lookups; "toy" is built in. Unknown names throw BackendError.
std::unique_ptr<AudioTokenizer> make_audio_tokenizer(const std::string& name);
std::unique_ptr<TextEncoder> make_text_encoder(const std::string& name);

/// Checks the sample rate, then tokenizes.
TokenGrid encode_audio(const AudioTokenizer& tokenizer, const Waveform& w);
EmbeddingSeq encode_text(const TextEncoder& encoder, std::string_view text);

}  // namespace p2m::gen
