#include "p2m/core/waveform.hpp"

#include <cmath>
#include <string>

#include "p2m/core/error.hpp"

namespace p2m {

Waveform::Waveform(std::vector<double> samples, int sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
  if (sample_rate_ <= 0) {
    throw ValidationError("waveform sample rate must be positive, got " + std::to_string(sample_rate_));
  }
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!std::isfinite(samples_[i])) {
      throw ValidationError("waveform sample " + std::to_string(i) + " is not finite");
    }
  }
}

Waveform Waveform::silence(double seconds, int sample_rate) {
  auto n = static_cast<std::size_t>(std::llround(seconds * sample_rate));
  return Waveform(std::vector<double>(n, 0.0), sample_rate);
}

double Waveform::rms() const {
  if (samples_.empty()) return 0.0;
  double acc = 0.0;
  for (double s : samples_) acc += s * s;
  return std::sqrt(acc / static_cast<double>(samples_.size()));
}

double Waveform::peak() const {
  double p = 0.0;
  for (double s : samples_) p = std::max(p, std::abs(s));
  return p;
}

}  // namespace p2m
