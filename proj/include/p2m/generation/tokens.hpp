#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "p2m/nn/autodiff.hpp"

namespace p2m::gen {

/// K codebooks x T timesteps of integer codes.
class TokenGrid {
 public:
  TokenGrid() = default;
  /// All-zero grid. Throws ValidationError for K < 1 or codebook_size < 1.
  TokenGrid(int codebooks, int timesteps, int codebook_size, double frame_rate);

  [[nodiscard]] int codebooks() const { return codebooks_; }
  [[nodiscard]] int timesteps() const { return timesteps_; }
  [[nodiscard]] int codebook_size() const { return codebook_size_; }
  [[nodiscard]] double frame_rate() const { return frame_rate_; }

  [[nodiscard]] int at(int k, int t) const { return tokens_[index(k, t)]; }
  /// Throws ValidationError for codes outside [0, codebook_size).
  void set(int k, int t, int code);
  [[nodiscard]] const std::vector<int>& raw() const { return tokens_; }

  void validate() const;

  [[nodiscard]] std::vector<std::uint8_t> serialize() const;
  static TokenGrid deserialize(const std::vector<std::uint8_t>& blob, const std::string& origin);

  friend bool operator==(const TokenGrid&, const TokenGrid&) = default;

 private:
  [[nodiscard]] std::size_t index(int k, int t) const;

  int codebooks_ = 0;
  int timesteps_ = 0;
  int codebook_size_ = 0;
  double frame_rate_ = 0.0;
  std::vector<int> tokens_;  // row-major, codebook-major
};

/// L x D real matrix, L >= 1, finite.
struct EmbeddingSeq {
  nn::Matrix vectors;

  void validate() const;
  [[nodiscard]] std::vector<std::uint8_t> serialize() const;
  static EmbeddingSeq deserialize(const std::vector<std::uint8_t>& blob, const std::string& origin);
  friend bool operator==(const EmbeddingSeq& a, const EmbeddingSeq& b) {
    return a.vectors.rows() == b.vectors.rows() && a.vectors.cols() == b.vectors.cols() && a.vectors == b.vectors;
  }
};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
/// Writes through a temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace p2m::gen
