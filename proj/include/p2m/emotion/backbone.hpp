#pragma once

#include <functional>
#include <memory>
#include <string>

#include "p2m/core/rng.hpp"
#include "p2m/image/image.hpp"
#include "p2m/nn/parameters.hpp"

namespace p2m::emotion {

/// Frozen image feature extractor producing a grid x grid x channels map,
/// returned flattened row-major as a (grid*grid) x channels matrix.
class ImageBackbone {
 public:
  virtual ~ImageBackbone() = default;
  [[nodiscard]] virtual std::string id() const = 0;
  [[nodiscard]] virtual int grid() const = 0;
  [[nodiscard]] virtual int channels() const = 0;
  [[nodiscard]] virtual nn::Matrix features(const nn::ParameterStore& store, const Image& img) const = 0;
  /// Names of the backbone's parameters inside the model store.
  [[nodiscard]] virtual std::vector<std::string> parameter_names() const = 0;
};

/// Desk-scale backbone: the image is resized to (grid*8)^2 pixels, each 8x8
/// patch is summarised by 8 statistics (channel means, channel standard
/// deviations, horizontal and vertical gradient energy) and a fixed seeded
/// projection with tanh maps them to `channels` features.
class ToyBackbone final : public ImageBackbone {
 public:
  static constexpr int kPatch = 8;
  static constexpr int kStats = 8;

  ToyBackbone(nn::ParameterStore& store, int grid, int channels, Rng& rng);
  [[nodiscard]] std::string id() const override { return "toy"; }
  [[nodiscard]] int grid() const override { return grid_; }
  [[nodiscard]] int channels() const override { return channels_; }
  [[nodiscard]] nn::Matrix features(const nn::ParameterStore& store, const Image& img) const override;
  [[nodiscard]] std::vector<std::string> parameter_names() const override { return {weight_, bias_}; }

  /// Per-patch statistics before projection: (grid*grid) x kStats.
  [[nodiscard]] nn::Matrix patch_statistics(const Image& img) const;

 private:
  int grid_;
  int channels_;
  std::string weight_ = "backbone.proj.weight";
  std::string bias_ = "backbone.proj.bias";
};

using BackboneFactory =
    std::function<std::unique_ptr<ImageBackbone>(nn::ParameterStore&, int grid, int channels, Rng&)>;

/// Adds a backbone under `name` (e.g. an adapter around a pretrained ResNet50).
void register_backbone(const std::string& name, BackboneFactory factory);

/// Throws BackendError for unknown names.
std::unique_ptr<ImageBackbone> make_backbone(const std::string& name, nn::ParameterStore& store, int grid,
                                             int channels, Rng& rng);

}  // namespace p2m::emotion
