#include "p2m/emotion/backbone.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "p2m/core/error.hpp"

namespace p2m::emotion {

ToyBackbone::ToyBackbone(nn::ParameterStore& store, int grid, int channels, Rng& rng)
    : grid_(grid), channels_(channels) {
  if (grid <= 0 || channels <= 0) throw ValidationError("toy backbone needs a positive grid and channel count");
  // The projection stands in for pretrained weights, so it ignores the
  // caller's rng and is identical for every model.
  (void)rng;
  Rng fixed(0x70b4c4b0ULL);
  store.add_normal(weight_, kStats, channels, 1.5, fixed);
  store.add_normal(bias_, 1, channels, 0.1, fixed);
}

nn::Matrix ToyBackbone::patch_statistics(const Image& img) const {
  const int side = grid_ * kPatch;
  const Image small = resize_bilinear(img, side, side);
  nn::Matrix stats(grid_ * grid_, kStats);
  auto luma = [&](int x, int y) {
    const auto* p = small.at(x, y);
    return (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0;
  };
  for (int gy = 0; gy < grid_; ++gy) {
    for (int gx = 0; gx < grid_; ++gx) {
      double sum[3] = {0, 0, 0}, sq[3] = {0, 0, 0};
      double dx = 0.0, dy = 0.0;
      for (int y = gy * kPatch; y < (gy + 1) * kPatch; ++y) {
        for (int x = gx * kPatch; x < (gx + 1) * kPatch; ++x) {
          const auto* p = small.at(x, y);
          for (int c = 0; c < 3; ++c) {
            const double v = p[c] / 255.0;
            sum[c] += v;
            sq[c] += v * v;
          }
          if (x + 1 < side) dx += std::abs(luma(x + 1, y) - luma(x, y));
          if (y + 1 < side) dy += std::abs(luma(x, y + 1) - luma(x, y));
        }
      }
      const double n = kPatch * kPatch;
      const int r = gy * grid_ + gx;
      for (int c = 0; c < 3; ++c) {
        const double mean = sum[c] / n;
        stats(r, c) = mean - 0.5;
        stats(r, 3 + c) = std::sqrt(std::max(0.0, sq[c] / n - mean * mean));
      }
      stats(r, 6) = dx / n;
      stats(r, 7) = dy / n;
    }
  }
  return stats;
}

nn::Matrix ToyBackbone::features(const nn::ParameterStore& store, const Image& img) const {
  const nn::Matrix stats = patch_statistics(img);
  nn::Matrix pre = stats * store.at(weight_).value();
  pre.rowwise() += store.at(bias_).value().row(0);
  return pre.array().tanh().matrix();
}

namespace {

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, BackboneFactory>& registry() {
  static std::map<std::string, BackboneFactory> r = {
      {"toy", [](nn::ParameterStore& s, int g, int c, Rng& rng) -> std::unique_ptr<ImageBackbone> {
         return std::make_unique<ToyBackbone>(s, g, c, rng);
       }}};
  return r;
}

}  // namespace

void register_backbone(const std::string& name, BackboneFactory factory) {
  std::lock_guard lock(registry_mutex());
  registry()[name] = std::move(factory);
}

std::unique_ptr<ImageBackbone> make_backbone(const std::string& name, nn::ParameterStore& store, int grid,
                                             int channels, Rng& rng) {
  BackboneFactory factory;
  {
    std::lock_guard lock(registry_mutex());
    auto it = registry().find(name);
    if (it == registry().end()) {
      throw BackendError("unknown image backbone \"" + name +
                         "\"; register an adapter with register_backbone() (built in: toy)");
    }
    factory = it->second;
  }
  return factory(store, grid, channels, rng);
}

}  // namespace p2m::emotion
