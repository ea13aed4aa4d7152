#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace p2m::audio {

/// Real-input forward FFT of a fixed size, backed by FFTW. Plans are created
/// under a global lock; execute() is safe to call concurrently on distinct
/// RealFft instances.
class RealFft {
 public:
  explicit RealFft(std::size_t size);
  ~RealFft();
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] std::size_t bins() const { return size_ / 2 + 1; }

  /// Spectrum of `input` (zero-padded or truncated to size()).
  std::vector<std::complex<double>> forward(std::span<const double> input);

  /// |X_k| for k in [0, bins()).
  std::vector<double> magnitude(std::span<const double> input);

 private:
  struct Impl;
  std::size_t size_;
  std::unique_ptr<Impl> impl_;
};

/// Periodic Hann window (the DFT-even form used for spectral analysis).
std::vector<double> hann_window(std::size_t n);

}  // namespace p2m::audio
