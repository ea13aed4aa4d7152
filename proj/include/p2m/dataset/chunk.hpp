#pragma once

#include <vector>

#include "p2m/core/waveform.hpp"

namespace p2m::dataset {

/// Consecutive non-overlapping chunks of round(chunk_seconds * rate) samples
/// from the start of `w`; the trailing partial chunk is dropped.
std::vector<Waveform> chunk_audio(const Waveform& w, double chunk_seconds);

}  // namespace p2m::dataset
