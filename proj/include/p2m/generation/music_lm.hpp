#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "p2m/generation/sampling.hpp"
#include "p2m/generation/tokens.hpp"
#include "p2m/nn/parameters.hpp"

namespace p2m::gen {

/// Trainable autoregressive model over codec tokens, conditioned on a text
/// embedding sequence through cross-attention.
class MusicLmBackend {
 public:
  virtual ~MusicLmBackend() = default;
  [[nodiscard]] virtual std::string id() const = 0;
  [[nodiscard]] virtual int codebooks() const = 0;
  [[nodiscard]] virtual int codebook_size() const = 0;
  [[nodiscard]] virtual int text_dim() const = 0;
  [[nodiscard]] virtual int num_layers() const = 0;

  virtual nn::ParameterStore& parameters() = 0;
  [[nodiscard]] virtual const nn::ParameterStore& parameters() const = 0;
  /// Parameter groups used by FreezePolicy.
  [[nodiscard]] virtual std::vector<std::string> text_encoder_parameter_names() const = 0;
  [[nodiscard]] virtual std::vector<std::string> embedding_parameter_names() const = 0;
  [[nodiscard]] virtual std::vector<std::string> layer_parameter_names(int layer) const = 0;
  [[nodiscard]] virtual std::vector<std::string> head_parameter_names() const = 0;

  /// Teacher-forced next-token cross-entropy, averaged over codebooks and
  /// the timesteps whose `mask` entry is nonzero (all when `mask` is empty).
  /// Returns a 1x1 graph node.
  [[nodiscard]] virtual nn::Var loss(const TokenGrid& tokens, const EmbeddingSeq& text,
                                     const std::vector<double>& mask = {}) const = 0;

  /// Samples `steps` frames with sample_topk. Deterministic given `rng`.
  [[nodiscard]] virtual TokenGrid generate_tokens(const EmbeddingSeq& text, int steps, int top_k,
                                                  double temperature, double frame_rate, Rng& rng) const = 0;
};

struct ToyMusicLmConfig {
  int codebooks = 2;
  int codebook_size = 64;
  int d_model = 32;
  int heads = 2;
  int layers = 4;
  int mlp_dim = 64;
  int text_dim = 16;
  double head_init_std = 1e-3;
  std::uint64_t init_seed = 0;

  void validate() const;
};

/// Decoder-only transformer without normalisation layers: per layer causal
/// self-attention, cross-attention to the projected text, and a ReLU MLP,
/// each on a residual branch. The input at step t is the sum of the
/// previous frame's code embeddings (a BOS code at t = 0) and a sinusoidal
/// position; one linear head per codebook predicts frame t.
class ToyMusicLm final : public MusicLmBackend {
 public:
  explicit ToyMusicLm(ToyMusicLmConfig cfg);

  [[nodiscard]] std::string id() const override { return "toy-music-lm-v1"; }
  [[nodiscard]] const ToyMusicLmConfig& config() const { return cfg_; }
  [[nodiscard]] int codebooks() const override { return cfg_.codebooks; }
  [[nodiscard]] int codebook_size() const override { return cfg_.codebook_size; }
  [[nodiscard]] int text_dim() const override { return cfg_.text_dim; }
  [[nodiscard]] int num_layers() const override { return cfg_.layers; }

  nn::ParameterStore& parameters() override { return store_; }
  [[nodiscard]] const nn::ParameterStore& parameters() const override { return store_; }
  [[nodiscard]] std::vector<std::string> text_encoder_parameter_names() const override;
  [[nodiscard]] std::vector<std::string> embedding_parameter_names() const override;
  [[nodiscard]] std::vector<std::string> layer_parameter_names(int layer) const override;
  [[nodiscard]] std::vector<std::string> head_parameter_names() const override;

  [[nodiscard]] nn::Var loss(const TokenGrid& tokens, const EmbeddingSeq& text,
                             const std::vector<double>& mask = {}) const override;
  [[nodiscard]] TokenGrid generate_tokens(const EmbeddingSeq& text, int steps, int top_k, double temperature,
                                          double frame_rate, Rng& rng) const override;

  /// Teacher-forced logits, one T x V matrix per codebook.
  [[nodiscard]] std::vector<nn::Matrix> logits(const TokenGrid& tokens, const EmbeddingSeq& text) const;
  /// Same logits computed step by step through the key/value cache used by
  /// generate_tokens.
  [[nodiscard]] std::vector<nn::Matrix> incremental_logits(const TokenGrid& tokens, const EmbeddingSeq& text) const;

 private:
  struct Layer {
    nn::MultiHeadAttention self_attn, cross_attn;
    nn::Linear mlp_in, mlp_out;
  };
  class Stepper;

  void check_inputs(const TokenGrid& tokens, const EmbeddingSeq& text) const;
  [[nodiscard]] std::vector<nn::Var> forward(const TokenGrid& tokens, const EmbeddingSeq& text) const;
  [[nodiscard]] nn::Matrix positions(int steps) const;

  ToyMusicLmConfig cfg_;
  nn::ParameterStore store_;
  nn::Linear text_proj_;
  std::vector<std::string> embeddings_;
  std::vector<Layer> layers_;
  std::vector<nn::Linear> heads_;
};

}  // namespace p2m::gen
