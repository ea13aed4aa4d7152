#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "p2m/core/waveform.hpp"

namespace p2m::audio {

/// Encodes a 16-bit PCM mono RIFF/WAVE file. Samples are clipped to [-1, 1]
/// and rounded to the nearest integer code.
std::vector<std::uint8_t> encode_wav16(const Waveform& w);

/// Writes encode_wav16(w) to `path`, creating parent directories.
void write_wav16(const Waveform& w, const std::filesystem::path& path);

/// Reads 8/16/24/32-bit integer or 32-bit float PCM; multichannel input is
/// averaged down to mono.
Waveform read_wav(const std::filesystem::path& path);
Waveform decode_wav(const std::vector<std::uint8_t>& bytes, const std::string& origin = "<memory>");

}  // namespace p2m::audio
