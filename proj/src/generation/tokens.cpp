#include "p2m/generation/tokens.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unistd.h>

#include "p2m/core/error.hpp"

namespace p2m::gen {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
  std::uint64_t v = 0;
  std::memcpy(&v, &d, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& b, std::string origin) : b_(b), origin_(std::move(origin)) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_++]) << (8 * i);
    double d = 0;
    std::memcpy(&d, &v, 8);
    return d;
  }
  void magic(const char* m) {
    need(4);
    if (std::memcmp(b_.data() + pos_, m, 4) != 0) throw IoError(origin_ + ": bad magic, expected " + m);
    pos_ += 4;
  }
  void done() const {
    if (pos_ != b_.size()) throw IoError(origin_ + ": trailing bytes");
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > b_.size()) throw IoError(origin_ + ": truncated");
  }
  const std::vector<std::uint8_t>& b_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace

TokenGrid::TokenGrid(int codebooks, int timesteps, int codebook_size, double frame_rate)
    : codebooks_(codebooks), timesteps_(timesteps), codebook_size_(codebook_size), frame_rate_(frame_rate) {
  if (codebooks < 1) throw ValidationError("token grid needs at least one codebook");
  if (timesteps < 0) throw ValidationError("token grid timesteps must be >= 0");
  if (codebook_size < 1) throw ValidationError("codebook size must be >= 1");
  if (!(frame_rate > 0.0)) throw ValidationError("frame rate must be positive");
  tokens_.assign(static_cast<std::size_t>(codebooks) * static_cast<std::size_t>(timesteps), 0);
}

std::size_t TokenGrid::index(int k, int t) const {
  if (k < 0 || k >= codebooks_ || t < 0 || t >= timesteps_) {
    throw ValidationError("token index (" + std::to_string(k) + ", " + std::to_string(t) + ") out of range");
  }
  return static_cast<std::size_t>(k) * static_cast<std::size_t>(timesteps_) + static_cast<std::size_t>(t);
}

void TokenGrid::set(int k, int t, int code) {
  if (code < 0 || code >= codebook_size_) {
    throw ValidationError("token " + std::to_string(code) + " outside [0, " + std::to_string(codebook_size_) + ")");
  }
  tokens_[index(k, t)] = code;
}

void TokenGrid::validate() const {
  if (codebooks_ < 1 || codebook_size_ < 1 || !(frame_rate_ > 0.0)) throw ValidationError("malformed token grid");
  if (tokens_.size() != static_cast<std::size_t>(codebooks_) * static_cast<std::size_t>(timesteps_)) {
    throw ValidationError("token grid size mismatch");
  }
  for (int v : tokens_) {
    if (v < 0 || v >= codebook_size_) throw ValidationError("token " + std::to_string(v) + " out of range");
  }
}

std::vector<std::uint8_t> TokenGrid::serialize() const {
  std::vector<std::uint8_t> out = {'P', '2', 'M', 'T'};
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(codebooks_));
  put_u32(out, static_cast<std::uint32_t>(timesteps_));
  put_u32(out, static_cast<std::uint32_t>(codebook_size_));
  put_f64(out, frame_rate_);
  for (int v : tokens_) put_u32(out, static_cast<std::uint32_t>(v));
  return out;
}

TokenGrid TokenGrid::deserialize(const std::vector<std::uint8_t>& blob, const std::string& origin) {
  Reader r(blob, origin);
  r.magic("P2MT");
  if (r.u32() != 1) throw IoError(origin + ": unsupported token grid version");
  const auto k = static_cast<int>(r.u32());
  const auto t = static_cast<int>(r.u32());
  const auto v = static_cast<int>(r.u32());
  const double fr = r.f64();
  TokenGrid g(k, t, v, fr);
  for (auto& x : g.tokens_) x = static_cast<int>(r.u32());
  r.done();
  g.validate();
  return g;
}

void EmbeddingSeq::validate() const {
  if (vectors.rows() < 1 || vectors.cols() < 1) throw ValidationError("embedding sequence is empty");
  if (!vectors.allFinite()) throw ValidationError("embedding sequence has non-finite entries");
}

std::vector<std::uint8_t> EmbeddingSeq::serialize() const {
  std::vector<std::uint8_t> out = {'P', '2', 'M', 'E'};
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(vectors.rows()));
  put_u32(out, static_cast<std::uint32_t>(vectors.cols()));
  for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) put_f64(out, vectors(i, j));
  }
  return out;
}

EmbeddingSeq EmbeddingSeq::deserialize(const std::vector<std::uint8_t>& blob, const std::string& origin) {
  Reader r(blob, origin);
  r.magic("P2ME");
  if (r.u32() != 1) throw IoError(origin + ": unsupported embedding version");
  const auto rows = static_cast<Eigen::Index>(r.u32());
  const auto cols = static_cast<Eigen::Index>(r.u32());
  EmbeddingSeq e{nn::Matrix(rows, cols)};
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) e.vectors(i, j) = r.f64();
  }
  r.done();
  e.validate();
  return e;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  const auto tmp = path.string() + ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot move " + tmp + " to " + path.string() + ": " + ec.message());
  }
}

}  // namespace p2m::gen
