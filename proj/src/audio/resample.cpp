#include "p2m/audio/resample.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "p2m/core/error.hpp"

namespace p2m::audio {

namespace {

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

class Kernel {
 public:
  Kernel(int source_rate, int target_rate, const ResampleDesign& d) {
    // Cutoff in cycles per source sample.
    cutoff_ = 0.5 * d.rolloff * std::min(1.0, static_cast<double>(target_rate) / source_rate);
    half_width_ = d.half_taps / (2.0 * cutoff_);
    reach_ = static_cast<long>(std::ceil(half_width_));
    beta_ = d.kaiser_beta;
    i0_beta_ = std::cyl_bessel_i(0.0, beta_);
  }

  long reach() const { return reach_; }

  /// Taps for offsets j in [-reach, reach + 1] around a source position whose
  /// fractional part is `frac`; normalised to unit DC gain.
  std::vector<double> taps(double frac) const {
    std::vector<double> h(static_cast<std::size_t>(2 * reach_ + 2));
    double sum = 0.0;
    for (long j = -reach_; j <= reach_ + 1; ++j) {
      const double t = static_cast<double>(j) - frac;
      double v = 0.0;
      if (std::abs(t) <= half_width_) {
        const double r = t / half_width_;
        const double win = std::cyl_bessel_i(0.0, beta_ * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta_;
        v = 2.0 * cutoff_ * sinc(2.0 * cutoff_ * t) * win;
      }
      h[static_cast<std::size_t>(j + reach_)] = v;
      sum += v;
    }
    if (sum != 0.0) {
      for (double& v : h) v /= sum;
    }
    return h;
  }

 private:
  double cutoff_ = 0.5;
  double half_width_ = 1.0;
  long reach_ = 1;
  double beta_ = 8.6;
  double i0_beta_ = 1.0;
};

}  // namespace

Waveform resample(const Waveform& w, int target_rate, const ResampleDesign& design) {
  if (target_rate <= 0) throw ValidationError("resample target rate must be positive");
  if (w.empty()) throw ValidationError("resample input is empty");
  const int source_rate = w.sample_rate();
  if (source_rate == target_rate) return w;

  const long g = std::gcd(source_rate, target_rate);
  const long up = target_rate / g;
  const long down = source_rate / g;
  const auto in_len = static_cast<long long>(w.size());
  const long long out_len = (2 * in_len * target_rate + source_rate) / (2LL * source_rate);

  const Kernel kernel(source_rate, target_rate, design);
  const long reach = kernel.reach();
  constexpr long kMaxCachedPhases = 4096;
  std::vector<std::vector<double>> phase_taps;
  if (up <= kMaxCachedPhases) {
    phase_taps.reserve(static_cast<std::size_t>(up));
    for (long p = 0; p < up; ++p) phase_taps.push_back(kernel.taps(static_cast<double>(p) / up));
  }

  const auto src = w.samples();
  std::vector<double> out(static_cast<std::size_t>(out_len));
  std::vector<double> scratch;
  for (long long i = 0; i < out_len; ++i) {
    const long long num = i * down;
    const long long base = num / up;
    const long phase = static_cast<long>(num % up);
    const std::vector<double>* h;
    if (up <= kMaxCachedPhases) {
      h = &phase_taps[static_cast<std::size_t>(phase)];
    } else {
      scratch = kernel.taps(static_cast<double>(phase) / up);
      h = &scratch;
    }
    double acc = 0.0;
    for (long j = -reach; j <= reach + 1; ++j) {
      const long long idx = base + j;
      if (idx < 0 || idx >= in_len) continue;
      acc += (*h)[static_cast<std::size_t>(j + reach)] * src[static_cast<std::size_t>(idx)];
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
  return Waveform(std::move(out), target_rate);
}

}  // namespace p2m::audio
