#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "p2m/core/emotion.hpp"
#include "p2m/emotion/backbone.hpp"
#include "p2m/image/image.hpp"
#include "p2m/nn/parameters.hpp"

namespace p2m::emotion {

struct ClassifierConfig {
  std::string backbone = "toy";
  int grid = 7;        // feature grid is grid x grid x channels
  int channels = 32;
  int gru_hidden = 16;  // per direction
  int gru_layers = 2;   // fixed
  int attention_heads = 4;
  double dropout = 0.3;
  int num_classes = static_cast<int>(kNumEmotions);  // fixed
  double head_init_std = 1e-3;
  std::uint64_t init_seed = 0;

  /// Attention runs over the 2*gru_hidden bidirectional outputs.
  [[nodiscard]] int model_dim() const { return 2 * gru_hidden; }
  void validate() const;
};

struct EmotionPrediction {
  Emotion label = Emotion::Happy;
  std::array<double, kNumEmotions> distribution{};
};

/// Softmax plus argmax; ties go to the lowest class index.
EmotionPrediction prediction_from_logits(const nn::Matrix& logits);

/// backbone -> H*W sequence of C-vectors -> BiGRU x2 -> multi-head
/// self-attention -> mean over the sequence -> centre -> dropout -> FC -> 5 logits.
/// Backbone parameters are frozen. The centre is a frozen running mean of the
/// pooled vector over the training set, refreshed once per epoch.
class ClassifierModel {
 public:
  explicit ClassifierModel(ClassifierConfig cfg);

  [[nodiscard]] const ClassifierConfig& config() const { return cfg_; }
  nn::ParameterStore& parameters() { return store_; }
  [[nodiscard]] const nn::ParameterStore& parameters() const { return store_; }
  [[nodiscard]] const ImageBackbone& backbone() const { return *backbone_; }
  /// Trainable parameters, i.e. everything not frozen.
  [[nodiscard]] std::vector<std::string> head_parameter_names() const;

  [[nodiscard]] nn::Matrix features(const Image& img) const;
  /// 1 x 5 logits. With `dropout_rng` set the dropout mask is sampled from it
  /// (training); without it dropout is the identity (inference).
  nn::Var logits_from_features(const nn::Matrix& features, Rng* dropout_rng = nullptr);
  [[nodiscard]] nn::Matrix logits(const Image& img) const;
  /// Resets the pooled-feature centre to the mean over `features`.
  void refresh_center(const std::vector<nn::Matrix>& features);

 private:
  ClassifierConfig cfg_;
  nn::ParameterStore store_;
  std::unique_ptr<ImageBackbone> backbone_;
  nn::BiGru gru1_, gru2_;
  nn::MultiHeadAttention attention_;
  nn::Linear fc_;

  nn::Var pool(const nn::Matrix& features);
};

/// Trained model handle used at inference time. Read-only, so concurrent
/// predict_emotion calls are safe.
using TrainedClassifier = ClassifierModel;

EmotionPrediction predict_emotion(const TrainedClassifier& model, const Image& img);
EmotionPrediction predict_emotion(const TrainedClassifier& model, const std::filesystem::path& image_path);

struct LabeledImage {
  std::string id;
  Image image;
  Emotion label = Emotion::Happy;
};

struct ClassifierTrainConfig {
  int batch_size = 16;
  int epochs = 40;
  double learning_rate = 1e-5;
  long warmup_steps = 100;
  int patience = 5;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
};

struct ClassifierEpoch {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double eval_loss = 0.0;
  double eval_accuracy = 0.0;
  double learning_rate = 0.0;
};

struct ClassifierHistory {
  std::vector<ClassifierEpoch> epochs;
  int best_epoch = 0;
  bool early_stopped = false;
};

/// Cross-entropy training of the head with AdamW and a warmup+cosine
/// schedule. Examples are ordered by id before seeded shuffling, so input
/// order does not matter. Early stopping watches eval loss (train loss when
/// no eval examples are given); the best epoch's weights are restored.
ClassifierHistory train_classifier(ClassifierModel& model, std::vector<LabeledImage> train,
                                   std::vector<LabeledImage> eval, const ClassifierTrainConfig& cfg);

/// Mean cross-entropy and accuracy in inference mode.
std::pair<double, double> evaluate_classifier(const ClassifierModel& model, const std::vector<LabeledImage>& data);

/// Writes the parameter blob to `path` and a JSON sidecar to `path` + ".json".
void save_classifier(const ClassifierModel& model, const std::filesystem::path& path);
std::unique_ptr<ClassifierModel> load_classifier(const std::filesystem::path& path);

}  // namespace p2m::emotion
