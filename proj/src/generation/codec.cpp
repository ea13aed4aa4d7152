#include "p2m/generation/codec.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "p2m/core/error.hpp"
#include "p2m/core/hash.hpp"
#include "p2m/core/rng.hpp"

namespace p2m::gen {

namespace {

constexpr double kMaxZcr = 0.5;
constexpr double kMinToneHz = 50.0;

int quantize(double x, double max) {
  const double q = std::round(std::clamp(x / max, 0.0, 1.0) * (ToyCodec::kCodebookSize - 1));
  return static_cast<int>(q);
}

}  // namespace

TokenGrid ToyCodec::encode(const Waveform& w) const {
  const auto n = static_cast<long>(w.size());
  const long frame = frame_samples();
  const int frames = static_cast<int>(std::lround(static_cast<double>(n) / static_cast<double>(frame)));
  TokenGrid grid(kCodebooks, frames, kCodebookSize, kFrameRate);
  const auto s = w.samples();
  for (int t = 0; t < frames; ++t) {
    const long begin = t * frame;
    const long end = std::min(n, begin + frame);
    double energy = 0.0;
    long crossings = 0;
    for (long i = begin; i < end; ++i) {
      energy += s[i] * s[i];
      if (i > begin && ((s[i - 1] < 0.0 && s[i] > 0.0) || (s[i - 1] > 0.0 && s[i] < 0.0))) ++crossings;
    }
    const long len = end - begin;
    const double rms = len > 0 ? std::sqrt(energy / static_cast<double>(len)) : 0.0;
    const double zcr = len > 1 ? static_cast<double>(crossings) / static_cast<double>(len - 1) : 0.0;
    grid.set(0, t, quantize(rms, 1.0));
    grid.set(1, t, quantize(zcr, kMaxZcr));
  }
  return grid;
}

Waveform ToyCodec::decode(const TokenGrid& grid) const {
  if (grid.codebooks() != kCodebooks || grid.codebook_size() != kCodebookSize) {
    throw ValidationError("token grid shape does not match " + id());
  }
  const int frame = frame_samples();
  const double sr = kCanonicalSampleRate;
  std::vector<double> out(static_cast<std::size_t>(grid.timesteps()) * static_cast<std::size_t>(frame), 0.0);
  std::vector<double> tone(static_cast<std::size_t>(frame));
  double phase = 0.0;
  for (int t = 0; t < grid.timesteps(); ++t) {
    const double rms = rms_of_code(grid.at(0, t));
    const double zcr = grid.at(1, t) * kMaxZcr / (kCodebookSize - 1);
    const double freq = std::clamp(zcr * sr / 2.0, kMinToneHz, sr / 4.0);
    const double step = 2.0 * std::numbers::pi * freq / sr;
    double energy = 0.0;
    double peak = 0.0;
    for (int i = 0; i < frame; ++i) {
      tone[i] = std::sin(phase);
      phase = std::fmod(phase + step, 2.0 * std::numbers::pi);
      energy += tone[i] * tone[i];
      peak = std::max(peak, std::abs(tone[i]));
    }
    if (rms == 0.0) continue;
    const double gain = rms / std::sqrt(energy / frame);
    double* dst = out.data() + static_cast<std::size_t>(t) * frame;
    if (gain * peak <= 1.0) {
      for (int i = 0; i < frame; ++i) dst[i] = gain * tone[i];
    } else {
      for (int i = 0; i < frame; ++i) dst[i] = tone[i] < 0.0 ? -rms : rms;
    }
  }
  return Waveform(std::move(out), kCanonicalSampleRate);
}

EmbeddingSeq ToyTextEncoder::encode(std::string_view text) const {
  std::vector<std::string> words;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c)) || (static_cast<unsigned char>(c) & 0x80)) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      words.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(cur);
  if (words.empty()) throw ValidationError("cannot encode empty text");
  EmbeddingSeq e{nn::Matrix(static_cast<Eigen::Index>(words.size()), kDim)};
  for (std::size_t i = 0; i < words.size(); ++i) {
    Rng rng(fnv1a64(words[i]));
    for (int j = 0; j < kDim; ++j) {
      const double freq = std::pow(10000.0, -static_cast<double>(j / 2 * 2) / kDim);
      const double pos = j % 2 == 0 ? std::sin(static_cast<double>(i) * freq) : std::cos(static_cast<double>(i) * freq);
      e.vectors(static_cast<Eigen::Index>(i), j) = rng.normal() + 0.1 * pos;
    }
  }
  return e;
}

std::unique_ptr<AudioTokenizer> make_audio_tokenizer(const std::string& name) {
  if (name == "toy" || name == "toy-codec-v1") return std::make_unique<ToyCodec>();
  throw BackendError("unknown audio tokenizer \"" + name + "\"; available: toy");
}

std::unique_ptr<TextEncoder> make_text_encoder(const std::string& name) {
  if (name == "toy" || name == "toy-hash-text-v1") return std::make_unique<ToyTextEncoder>();
  throw BackendError("unknown text encoder \"" + name + "\"; available: toy");
}

TokenGrid encode_audio(const AudioTokenizer& tokenizer, const Waveform& w) {
  if (w.sample_rate() != tokenizer.sample_rate()) {
    throw ValidationError("audio is " + std::to_string(w.sample_rate()) + " Hz but " + tokenizer.id() + " expects " +
                          std::to_string(tokenizer.sample_rate()) + " Hz");
  }
  auto grid = tokenizer.encode(w);
  grid.validate();
  return grid;
}

EmbeddingSeq encode_text(const TextEncoder& encoder, std::string_view text) {
  auto e = encoder.encode(text);
  e.validate();
  return e;
}

}  // namespace p2m::gen
