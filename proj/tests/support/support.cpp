#include "support.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "p2m/core/rng.hpp"
#include "p2m/pipeline/cli.hpp"

namespace p2m::testing {

namespace fs = std::filesystem;

fs::path fixture_dir() { return fs::path(P2M_FIXTURE_DIR); }

TempDir::TempDir(const std::string& tag) {
  std::random_device rd;
  const auto base = fs::temp_directory_path();
  for (int attempt = 0; attempt < 100; ++attempt) {
    const auto candidate = base / (tag + "-" + std::to_string(rd()) + std::to_string(attempt));
    if (fs::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
  throw std::runtime_error("cannot create a temp directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliResult r;
  r.code = pipeline::dispatch(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

namespace {

void must(const std::vector<std::string>& args) {
  const auto r = run_cli(args);
  if (r.code != 0) {
    std::string joined;
    for (const auto& a : args) joined += a + " ";
    throw std::runtime_error("p2m " + joined + "exited " + std::to_string(r.code) + ": " + r.err);
  }
}

}  // namespace

fs::path ToyWorkspace::music_ckpt(text::Variant v) const {
  return root / "checkpoints" / (std::string(text::to_string(v)) + ".ckpt");
}

ToyWorkspace build_workspace(const fs::path& root, std::uint64_t seed) {
  ToyWorkspace ws;
  ws.root = root;
  ws.manifest = root / "data" / "manifest.json";
  ws.emotion_ckpt = root / "checkpoints" / "emotion.ckpt";
  ws.cache = root / "cache";
  const std::string s = std::to_string(seed);
  const auto fx = fixture_dir();
  must({"--seed", s, "--log-level", "error", "curate", "--paintings", (fx / "paintings").string(), "--midi",
        (fx / "midi").string(), "--out", (root / "data").string()});
  must({"--seed", s, "--log-level", "error", "train-emotion", "--manifest", ws.manifest.string(), "--out",
        ws.emotion_ckpt.string(), "--batch-size", std::to_string(kQuickBatch), "--lr", std::to_string(kQuickLr),
        "--warmup", std::to_string(kQuickWarmup), "--epochs", "40"});
  must({"--seed", s, "--log-level", "error", "caption", "--manifest", ws.manifest.string(), "--ckpt",
        ws.emotion_ckpt.string()});
  must({"--seed", s, "--log-level", "error", "enhance", "--manifest", ws.manifest.string()});
  return ws;
}

fs::path finetune_variant(const ToyWorkspace& ws, text::Variant v, int epochs, std::uint64_t seed) {
  const std::string s = std::to_string(seed);
  const std::string name(text::to_string(v));
  const auto ckpt = ws.music_ckpt(v);
  std::vector<std::string> args = {"--seed", s, "--log-level", "error", "finetune", "--manifest", ws.manifest.string(),
                                   "--variant", name, "--out", ckpt.string(), "--batch-size",
                                   std::to_string(kQuickBatch), "--lr", std::to_string(kQuickLr), "--warmup",
                                   std::to_string(kQuickWarmup), "--epochs", std::to_string(epochs)};
  if (v == text::Variant::Optimized) {
    must({"--log-level", "error", "precompute", "--manifest", ws.manifest.string(), "--variant", name, "--cache",
          ws.cache.string()});
    args.push_back("--cache");
    args.push_back(ws.cache.string());
  }
  must(args);
  return ckpt;
}

std::vector<emotion::LabeledImage> separable_images(int per_class, std::uint64_t seed, int size) {
  // Base colour and stripe period per class, in Emotion order.
  static constexpr std::array<std::array<int, 4>, kNumEmotions> kStyle = {{
      {230, 200, 60, 0},   // happy: warm yellow, flat
      {200, 30, 20, 4},    // angry: red, tight stripes
      {40, 60, 150, 0},    // sad: dark blue, flat
      {60, 200, 220, 3},   // fun: fine cyan checks
      {128, 128, 132, 0},  // neutral: grey
  }};
  Rng rng(derive_seed(seed, "separable-images"));
  std::vector<emotion::LabeledImage> out;
  for (Emotion e : kAllEmotions) {
    const auto& st = kStyle[index_of(e)];
    for (int i = 0; i < per_class; ++i) {
      Image img(size, size);
      const double jitter = 20.0 * (rng.uniform() - 0.5);
      for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
          const bool dark = st[3] > 0 && ((x / st[3] + y / st[3]) % 2 == 0);
          for (int c = 0; c < 3; ++c) {
            double v = st[c] + jitter + 16.0 * (rng.uniform() - 0.5);
            if (dark) v *= 0.2;
            img.at(x, y)[c] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
          }
        }
      }
      out.push_back({std::string(to_string(e)) + "_" + std::to_string(i), std::move(img), e});
    }
  }
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace p2m::testing
