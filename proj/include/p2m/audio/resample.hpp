#pragma once

#include "p2m/core/waveform.hpp"

namespace p2m::audio {

/// Windowed-sinc filter design used by resample().
struct ResampleDesign {
  int half_taps = 32;         // zero crossings on each side of the kernel centre
  double kaiser_beta = 8.6;   // ~-90 dB stopband
  double rolloff = 0.94;      // passband edge as a fraction of the lower Nyquist
};

/// Band-limited rational resampling. Output length is
/// round(len * target_rate / source_rate); identity when the rates match.
Waveform resample(const Waveform& w, int target_rate, const ResampleDesign& design = {});

}  // namespace p2m::audio
