#include "p2m/dataset/chunk.hpp"

#include <cmath>

#include "p2m/core/error.hpp"

namespace p2m::dataset {

std::vector<Waveform> chunk_audio(const Waveform& w, double chunk_seconds) {
  if (!(chunk_seconds > 0.0)) throw ValidationError("chunk_seconds must be positive");
  const auto len = static_cast<std::size_t>(std::llround(chunk_seconds * w.sample_rate()));
  if (len == 0) throw ValidationError("chunk length rounds to zero samples");
  std::vector<Waveform> chunks;
  const auto src = w.samples();
  for (std::size_t start = 0; start + len <= src.size(); start += len) {
    chunks.emplace_back(std::vector<double>(src.begin() + static_cast<std::ptrdiff_t>(start),
                                            src.begin() + static_cast<std::ptrdiff_t>(start + len)),
                        w.sample_rate());
  }
  return chunks;
}

}  // namespace p2m::dataset
