#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace p2m {

inline constexpr int kCanonicalSampleRate = 32000;

/// Mono PCM audio. Amplitudes are nominally in [-1, 1] and always finite.
class Waveform {
 public:
  Waveform() = default;
  Waveform(std::vector<double> samples, int sample_rate);

  /// `seconds` of silence at `sample_rate`.
  static Waveform silence(double seconds, int sample_rate);

  [[nodiscard]] int sample_rate() const { return sample_rate_; }
  [[nodiscard]] std::size_t size() const { return samples_.size(); }
  [[nodiscard]] bool empty() const { return samples_.empty(); }
  [[nodiscard]] double duration() const {
    return sample_rate_ > 0 ? static_cast<double>(samples_.size()) / sample_rate_ : 0.0;
  }

  [[nodiscard]] std::span<const double> samples() const { return samples_; }
  [[nodiscard]] const std::vector<double>& data() const { return samples_; }
  double operator[](std::size_t i) const { return samples_[i]; }

  /// Root mean square over the whole signal (0 for empty input).
  [[nodiscard]] double rms() const;
  [[nodiscard]] double peak() const;

  friend bool operator==(const Waveform&, const Waveform&) = default;

 private:
  std::vector<double> samples_;
  int sample_rate_ = kCanonicalSampleRate;
};

}  // namespace p2m
