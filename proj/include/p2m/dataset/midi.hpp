#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "p2m/core/error.hpp"

namespace p2m::dataset {

/// Corrupt or unsupported Standard MIDI File; carries the byte offset at
/// which decoding failed.
class MidiParseError : public IoError {
 public:
  MidiParseError(const std::string& origin, std::size_t offset, const std::string& what)
      : IoError(origin + ": corrupt MIDI at byte " + std::to_string(offset) + ": " + what), offset_(offset) {}
  [[nodiscard]] std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

struct MidiNote {
  int channel = 0;
  int key = 60;
  int velocity = 100;
  double start = 0.0;  // seconds
  double end = 0.0;    // seconds

  friend bool operator==(const MidiNote&, const MidiNote&) = default;
};

struct MidiSong {
  std::vector<MidiNote> notes;  // sorted by (start, key, channel)

  /// Time of the last note-off in seconds (0 for an empty song).
  [[nodiscard]] double end_time() const;
};

/// Parses format 0/1 Standard MIDI Files with tempo changes, running status
/// and SMPTE or PPQ time division.
MidiSong parse_midi(std::span<const std::uint8_t> bytes, const std::string& origin = "<memory>");
MidiSong read_midi(const std::filesystem::path& path);

/// Minimal format-0 writer (used for fixtures and tests): one tempo, notes
/// given in seconds are quantised to ticks.
std::vector<std::uint8_t> write_midi(const std::vector<MidiNote>& notes, int ticks_per_quarter = 480,
                                     int microseconds_per_quarter = 500000);

}  // namespace p2m::dataset
