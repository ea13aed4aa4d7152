#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "p2m/emotion/classifier.hpp"
#include "p2m/text/text.hpp"

namespace p2m::testing {

std::filesystem::path fixture_dir();

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "p2m");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::vector<std::string>& args);

/// Small-data training settings the fixture can satisfy (warmup <= total steps).
inline constexpr int kQuickBatch = 4;
inline constexpr double kQuickLr = 3e-3;
inline constexpr long kQuickWarmup = 2;

struct ToyWorkspace {
  std::filesystem::path root;
  std::filesystem::path manifest;
  std::filesystem::path emotion_ckpt;
  std::filesystem::path cache;
  [[nodiscard]] std::filesystem::path music_ckpt(text::Variant v) const;
};

/// curate -> train-emotion -> caption -> enhance on the committed fixture,
/// all through the CLI. Throws on any non-zero exit.
ToyWorkspace build_workspace(const std::filesystem::path& root, std::uint64_t seed);

/// precompute (optimized only) + finetune for one variant; returns the checkpoint.
std::filesystem::path finetune_variant(const ToyWorkspace& ws, text::Variant v, int epochs, std::uint64_t seed);

/// Synthetic paintings whose colour statistics depend on the class.
std::vector<emotion::LabeledImage> separable_images(int per_class, std::uint64_t seed, int size = 56);

std::string read_text(const std::filesystem::path& path);

}  // namespace p2m::testing
