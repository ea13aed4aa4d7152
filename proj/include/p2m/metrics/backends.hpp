#pragma once

#include <memory>
#include <string>

#include "p2m/core/waveform.hpp"
#include "p2m/nn/autodiff.hpp"

namespace p2m::metrics {

/// Audio -> one embedding row per analysis window.
class AudioEmbedder {
 public:
  virtual ~AudioEmbedder() = default;
  [[nodiscard]] virtual std::string id() const = 0;
  [[nodiscard]] virtual int dim() const = 0;
  [[nodiscard]] virtual nn::Matrix embed(const Waveform& w) const = 0;
};

/// Audio -> 5-way emotion posterior (class order of Emotion).
class AudioClassifier {
 public:
  virtual ~AudioClassifier() = default;
  [[nodiscard]] virtual std::string id() const = 0;
  [[nodiscard]] virtual Eigen::VectorXd posterior(const Waveform& w) const = 0;
};

/// Joint text/audio embedding space.
class ClapModel {
 public:
  virtual ~ClapModel() = default;
  [[nodiscard]] virtual std::string id() const = 0;
  [[nodiscard]] virtual Eigen::VectorXd embed_text(const std::string& text) const = 0;
  [[nodiscard]] virtual Eigen::VectorXd embed_audio(const Waveform& w) const = 0;
};

/// 16 mel-band log energies averaged over 2048-sample Hann frames inside
/// each 1 s window (a shorter signal is one window). Input must be 32 kHz.
class ToyEmbedder final : public AudioEmbedder {
 public:
  static constexpr int kBands = 16;
  [[nodiscard]] std::string id() const override { return "toy-mel16-v1"; }
  [[nodiscard]] int dim() const override { return kBands; }
  [[nodiscard]] nn::Matrix embed(const Waveform& w) const override;
};

/// Softmax of a fixed seeded projection of the mean toy embedding.
class ToyAudioClassifier final : public AudioClassifier {
 public:
  ToyAudioClassifier();
  [[nodiscard]] std::string id() const override { return "toy-emotion-audio-v1"; }
  [[nodiscard]] Eigen::VectorXd posterior(const Waveform& w) const override;

 private:
  ToyEmbedder embedder_;
  nn::Matrix weight_;  // 16 x 5
};

/// Both towers land in a 5-dim emotion space plus a shared 8-dim residue:
/// text through emotion-word counts and hashed words, audio through the
/// toy classifier posterior and the embedding mean.
class ToyClap final : public ClapModel {
 public:
  ToyClap();
  [[nodiscard]] std::string id() const override { return "toy-clap-v1"; }
  [[nodiscard]] Eigen::VectorXd embed_text(const std::string& text) const override;
  [[nodiscard]] Eigen::VectorXd embed_audio(const Waveform& w) const override;

 private:
  ToyAudioClassifier classifier_;
  ToyEmbedder embedder_;
  nn::Matrix audio_proj_;  // 16 x 8
};

/// "toy" is built in; unknown names throw BackendError.
std::unique_ptr<AudioEmbedder> make_embedder(const std::string& name);
std::unique_ptr<AudioClassifier> make_audio_classifier(const std::string& name);
std::unique_ptr<ClapModel> make_clap(const std::string& name);

}  // namespace p2m::metrics
