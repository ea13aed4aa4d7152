#pragma once

#include <memory>
#include <string>

#include "p2m/core/waveform.hpp"
#include "p2m/dataset/midi.hpp"

namespace p2m::dataset {

/// Renders note events to audio. Implementations must be deterministic.
class MidiSynthBackend {
 public:
  virtual ~MidiSynthBackend() = default;
  [[nodiscard]] virtual std::string id() const = 0;
  [[nodiscard]] virtual Waveform render(const MidiSong& song, int sample_rate) const = 0;
};

struct ToySynthConfig {
  double release_seconds = 0.5;
  double attack_seconds = 0.005;
  double gain = 0.25;
  double peak_limit = 0.99;
};

/// Additive synth: one sine per note, linear attack, linear release tail.
/// Output length is round((last note-off + release) * rate). The mix is
/// scaled down uniformly if its peak exceeds peak_limit.
class ToySineSynth final : public MidiSynthBackend {
 public:
  explicit ToySineSynth(ToySynthConfig cfg = {}) : cfg_(cfg) {}
  [[nodiscard]] std::string id() const override { return "toy-sine"; }
  [[nodiscard]] Waveform render(const MidiSong& song, int sample_rate) const override;

 private:
  ToySynthConfig cfg_;
};

struct MidiSource {
  std::filesystem::path path;
  std::string cluster_label;
};

/// Parses and renders one MIDI file. Empty songs are an error.
Waveform render_midi(const MidiSource& source, const MidiSynthBackend& synth, int sample_rate);

}  // namespace p2m::dataset
