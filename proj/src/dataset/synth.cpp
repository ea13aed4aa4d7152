#include "p2m/dataset/synth.hpp"

#include <cmath>
#include <numbers>

namespace p2m::dataset {

Waveform ToySineSynth::render(const MidiSong& song, int sample_rate) const {
  const double total = song.end_time() + cfg_.release_seconds;
  const auto len = static_cast<std::size_t>(std::llround(total * sample_rate));
  std::vector<double> mix(len, 0.0);
  const double dt = 1.0 / sample_rate;
  for (const auto& note : song.notes) {
    const double freq = 440.0 * std::pow(2.0, (note.key - 69) / 12.0);
    const double amp = cfg_.gain * note.velocity / 127.0;
    const double held = std::max(0.0, note.end - note.start);
    const auto first = static_cast<std::size_t>(std::llround(note.start * sample_rate));
    const auto last = std::min(len, static_cast<std::size_t>(std::llround((note.end + cfg_.release_seconds) * sample_rate)));
    for (std::size_t i = first; i < last; ++i) {
      const double t = static_cast<double>(i) * dt - note.start;
      double env = 1.0;
      if (cfg_.attack_seconds > 0.0 && t < cfg_.attack_seconds) env = std::max(0.0, t / cfg_.attack_seconds);
      if (t > held) {
        env *= cfg_.release_seconds > 0.0 ? std::max(0.0, 1.0 - (t - held) / cfg_.release_seconds) : 0.0;
      }
      mix[i] += amp * env * std::sin(2.0 * std::numbers::pi * freq * t);
    }
  }
  double peak = 0.0;
  for (double s : mix) peak = std::max(peak, std::abs(s));
  if (peak > cfg_.peak_limit) {
    const double k = cfg_.peak_limit / peak;
    for (double& s : mix) s *= k;
  }
  return Waveform(std::move(mix), sample_rate);
}

Waveform render_midi(const MidiSource& source, const MidiSynthBackend& synth, int sample_rate) {
  if (sample_rate <= 0) throw ValidationError("render sample rate must be positive");
  const MidiSong song = read_midi(source.path);
  if (song.notes.empty()) throw ValidationError(source.path.string() + ": MIDI file contains no notes");
  return synth.render(song, sample_rate);
}

}  // namespace p2m::dataset
