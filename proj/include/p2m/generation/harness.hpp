#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "p2m/core/error.hpp"
#include "p2m/core/manifest.hpp"
#include "p2m/generation/codec.hpp"
#include "p2m/generation/music_lm.hpp"
#include "p2m/text/text.hpp"

namespace p2m::gen {

struct TrainingConfig {
  int batch_size = 16;
  int epochs = 40;
  double learning_rate = 1e-5;
  long warmup_steps = 100;
  int patience = 5;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;

  /// Checks positivity and warmup_steps <= total optimiser steps for a
  /// training set of `train_size` examples.
  void validate(std::size_t train_size) const;
  [[nodiscard]] long total_steps(std::size_t train_size) const;
};

struct FreezePolicy {
  bool freeze_text_encoder = true;
  double frozen_transformer_fraction = 0.5;

  void validate() const;
  /// floor(fraction * layers).
  [[nodiscard]] int frozen_layers(int layers) const;
  /// Emotive, narrative and lyrical train every decoder layer; optimized
  /// freezes the first half.
  static FreezePolicy for_variant(text::Variant v);
};

/// Freezes (and unfreezes) parameters of `model` per `policy`: the text
/// projection when freeze_text_encoder, the first frozen_layers decoder
/// layers, and the code embeddings whenever any layer is frozen. Output
/// heads always train. Returns the frozen names.
std::vector<std::string> apply_freeze_policy(MusicLmBackend& model, const FreezePolicy& policy);

struct FinetuneExample {
  std::string id;
  TokenGrid tokens;
  EmbeddingSeq text;
};

struct FinetuneEpoch {
  int epoch = 0;
  double train_loss = 0.0;
  double eval_loss = 0.0;
  double learning_rate = 0.0;
};

struct FinetuneHistory {
  std::vector<FinetuneEpoch> epochs;
  int best_epoch = 0;
  double best_eval_loss = 0.0;
  bool early_stopped = false;
  /// True when the eval set was empty and train loss drove early stopping.
  bool eval_fell_back_to_train = false;
  std::vector<std::string> frozen;
};

/// Raised when the loss turns non-finite. The model already holds the last
/// good (best-epoch) parameters when this propagates.
class TrainingAborted : public Error {
 public:
  TrainingAborted(const std::string& what, FinetuneHistory history) : Error(what), history_(std::move(history)) {}
  [[nodiscard]] const FinetuneHistory& history() const { return history_; }

 private:
  FinetuneHistory history_;
};

/// Mean teacher-forced loss over `data` without touching gradients.
double mean_loss(const MusicLmBackend& model, const std::vector<FinetuneExample>& data);

/// Next-token training with AdamW and warmup+cosine. Examples are ordered by
/// id, then shuffled per epoch from the seed; the per-example loss is
/// averaged over each batch. Early stopping watches eval loss (train loss
/// when `eval` is empty); the best epoch's parameters are restored.
FinetuneHistory finetune(MusicLmBackend& model, std::vector<FinetuneExample> train,
                         std::vector<FinetuneExample> eval, const TrainingConfig& cfg, const FreezePolicy& policy);

struct PrecomputeResult {
  std::filesystem::path index_path;
  std::size_t entries = 0;
  std::size_t audio_written = 0;
  std::size_t text_written = 0;
  bool index_written = false;
};

/// "index-<variant>.json" inside the cache directory.
std::filesystem::path cache_index_path(const std::filesystem::path& cache_dir, text::Variant v);

/// Tokenizes the audio and encodes the variant text of every train and eval
/// sample into content-addressed files under `cache_dir` (audio/<sha>.tok,
/// text/<sha>.emb) and writes an index mapping sample id to entries.
/// Existing entries and an unchanged index are not rewritten.
PrecomputeResult precompute_tensors(const Manifest& manifest, const std::filesystem::path& manifest_dir,
                                    text::Variant variant, const AudioTokenizer& codec, const TextEncoder& encoder,
                                    const std::filesystem::path& cache_dir, unsigned threads = 0);

struct TrainingSet {
  std::vector<FinetuneExample> train;
  std::vector<FinetuneExample> eval;
};

/// Builds train/eval examples from the cache index when `cache_dir` is set
/// (required for the optimized variant), otherwise by encoding on the fly.
TrainingSet load_training_set(const Manifest& manifest, const std::filesystem::path& manifest_dir,
                              text::Variant variant, const AudioTokenizer& codec, const TextEncoder& encoder,
                              const std::optional<std::filesystem::path>& cache_dir);

struct MusicCheckpoint {
  std::unique_ptr<ToyMusicLm> model;
  text::Variant variant = text::Variant::Emotive;
  std::string codec_id;
  std::string text_encoder_id;
  TrainingConfig training;
  FreezePolicy policy;
  std::string content_hash;  // SHA-256 of the parameter blob
};

/// Parameter blob at `path`, JSON sidecar at `path` + ".json".
void save_music_checkpoint(const MusicCheckpoint& ckpt, const std::filesystem::path& path);
MusicCheckpoint load_music_checkpoint(const std::filesystem::path& path);

/// round(max_seconds * frame_rate) sampled frames decoded to a waveform.
/// Throws BackendError when the checkpoint was trained for another codec or
/// text encoder.
Waveform generate(const MusicCheckpoint& ckpt, const AudioTokenizer& codec, const TextEncoder& encoder,
                  const std::string& text, const SamplingConfig& scfg);

}  // namespace p2m::gen
