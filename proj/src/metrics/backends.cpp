#include "p2m/metrics/backends.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "p2m/audio/fft.hpp"
#include "p2m/core/emotion.hpp"
#include "p2m/core/error.hpp"
#include "p2m/core/hash.hpp"
#include "p2m/core/rng.hpp"

namespace p2m::metrics {

namespace {

constexpr int kFrame = 2048;
constexpr int kHop = 1024;
constexpr double kFloor = 1e-10;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular filters, kBands x bins.
nn::Matrix mel_filterbank(int bands, int frame, double sr) {
  const int bins = frame / 2 + 1;
  const double lo = hz_to_mel(20.0), hi = hz_to_mel(sr / 2.0);
  std::vector<double> edges(static_cast<std::size_t>(bands + 2));
  for (int i = 0; i < bands + 2; ++i) edges[i] = mel_to_hz(lo + (hi - lo) * i / (bands + 1));
  nn::Matrix fb = nn::Matrix::Zero(bands, bins);
  for (int b = 0; b < bands; ++b) {
    for (int k = 0; k < bins; ++k) {
      const double f = k * sr / frame;
      if (f > edges[b] && f < edges[b + 2]) {
        fb(b, k) = f <= edges[b + 1] ? (f - edges[b]) / (edges[b + 1] - edges[b])
                                     : (edges[b + 2] - f) / (edges[b + 2] - edges[b + 1]);
      }
    }
  }
  return fb;
}

nn::Matrix seeded(Eigen::Index rows, Eigen::Index cols, std::string_view tag, double std) {
  Rng rng(fnv1a64(tag));
  nn::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = std * rng.normal();
  }
  return m;
}

// Maps log energies (roughly -23..0) to values near unit scale.
Eigen::VectorXd standardise(const Eigen::VectorXd& mean_log) { return (mean_log.array() + 12.0) / 6.0; }

}  // namespace

nn::Matrix ToyEmbedder::embed(const Waveform& w) const {
  if (w.sample_rate() != kCanonicalSampleRate) {
    throw ValidationError("toy embedder expects " + std::to_string(kCanonicalSampleRate) + " Hz audio, got " +
                          std::to_string(w.sample_rate()));
  }
  if (w.size() < static_cast<std::size_t>(kFrame)) {
    throw ValidationError("audio shorter than one " + std::to_string(kFrame) + "-sample analysis frame");
  }
  static const nn::Matrix fb = mel_filterbank(kBands, kFrame, kCanonicalSampleRate);
  const auto window = audio::hann_window(kFrame);
  audio::RealFft fft(kFrame);
  const std::size_t win = static_cast<std::size_t>(kCanonicalSampleRate);
  const std::size_t windows = std::max<std::size_t>(1, w.size() / win);
  const auto s = w.samples();
  nn::Matrix out(static_cast<Eigen::Index>(windows), kBands);
  std::vector<double> buf(kFrame);
  Eigen::VectorXd power(kFrame / 2 + 1);
  for (std::size_t wi = 0; wi < windows; ++wi) {
    const std::size_t begin = wi * win;
    const std::size_t end = windows == 1 ? s.size() : begin + win;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(kBands);
    int frames = 0;
    for (std::size_t f = begin; f + kFrame <= end; f += kHop) {
      for (int i = 0; i < kFrame; ++i) buf[i] = s[f + static_cast<std::size_t>(i)] * window[i];
      const auto mag = fft.magnitude(buf);
      for (int k = 0; k <= kFrame / 2; ++k) power(k) = mag[k] * mag[k] / kFrame;
      acc += fb * power;
      ++frames;
    }
    acc /= std::max(frames, 1);
    for (int b = 0; b < kBands; ++b) out(static_cast<Eigen::Index>(wi), b) = std::log10(kFloor + acc(b));
  }
  return out;
}

ToyAudioClassifier::ToyAudioClassifier() : weight_(seeded(ToyEmbedder::kBands, kNumEmotions, "toy-audio-cls", 1.0)) {}

Eigen::VectorXd ToyAudioClassifier::posterior(const Waveform& w) const {
  const Eigen::VectorXd mean = embedder_.embed(w).colwise().mean().transpose();
  const Eigen::VectorXd logits = weight_.transpose() * standardise(mean);
  const Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

ToyClap::ToyClap() : audio_proj_(seeded(ToyEmbedder::kBands, 8, "toy-clap-audio", 0.25)) {}

Eigen::VectorXd ToyClap::embed_text(const std::string& text) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(kNumEmotions + 8);
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    if (auto e = try_parse_emotion(word)) v(static_cast<Eigen::Index>(index_of(*e))) += 1.0;
    Rng rng(fnv1a64("clap:" + word));
    for (int j = 0; j < 8; ++j) v(static_cast<Eigen::Index>(kNumEmotions) + j) += 0.25 * rng.normal();
    word.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      flush();
    }
  }
  flush();
  if (v.norm() == 0.0) throw ValidationError("toy CLAP cannot embed empty text");
  return v;
}

Eigen::VectorXd ToyClap::embed_audio(const Waveform& w) const {
  Eigen::VectorXd v(kNumEmotions + 8);
  const Eigen::VectorXd p = classifier_.posterior(w);
  v.head(kNumEmotions) = p.array() - 1.0 / kNumEmotions + 1e-3;
  const Eigen::VectorXd mean = embedder_.embed(w).colwise().mean().transpose();
  v.tail(8) = audio_proj_.transpose() * standardise(mean);
  return v;
}

std::unique_ptr<AudioEmbedder> make_embedder(const std::string& name) {
  if (name == "toy" || name == "toy-mel16-v1") return std::make_unique<ToyEmbedder>();
  throw BackendError("unknown audio embedder \"" + name + "\"; available: toy");
}

std::unique_ptr<AudioClassifier> make_audio_classifier(const std::string& name) {
  if (name == "toy" || name == "toy-emotion-audio-v1") return std::make_unique<ToyAudioClassifier>();
  throw BackendError("unknown audio classifier \"" + name + "\"; available: toy");
}

std::unique_ptr<ClapModel> make_clap(const std::string& name) {
  if (name == "toy" || name == "toy-clap-v1") return std::make_unique<ToyClap>();
  throw BackendError("unknown CLAP model \"" + name + "\"; available: toy");
}

}  // namespace p2m::metrics
