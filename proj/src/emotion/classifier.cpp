#include "p2m/emotion/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>
#include <sstream>

#include "p2m/core/error.hpp"
#include "p2m/core/hash.hpp"
#include "p2m/nn/optim.hpp"

namespace p2m::emotion {

using nn::Matrix;
using nn::Var;

namespace {
constexpr const char* kCenter = "center.mean";
}

void ClassifierConfig::validate() const {
  if (gru_layers != 2) throw ValidationError("classifier gru_layers is fixed at 2");
  if (num_classes != static_cast<int>(kNumEmotions)) throw ValidationError("classifier num_classes is fixed at 5");
  if (grid <= 0 || channels <= 0 || gru_hidden <= 0) {
    throw ValidationError("classifier grid, channels and gru_hidden must be positive");
  }
  if (attention_heads <= 0 || model_dim() % attention_heads != 0) {
    throw ValidationError("attention dim " + std::to_string(model_dim()) + " (2 x gru_hidden) is not divisible by " +
                          std::to_string(attention_heads) + " heads");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("dropout rate must be in [0, 1)");
}

EmotionPrediction prediction_from_logits(const Matrix& logits) {
  if (logits.size() != static_cast<Eigen::Index>(kNumEmotions)) {
    throw ValidationError("expected 5 logits, got " + std::to_string(logits.size()));
  }
  EmotionPrediction p;
  const double mx = logits.maxCoeff();
  double sum = 0.0;
  for (std::size_t i = 0; i < kNumEmotions; ++i) {
    p.distribution[i] = std::exp(logits(static_cast<Eigen::Index>(i)) - mx);
    sum += p.distribution[i];
  }
  std::size_t best = 0;
  for (std::size_t i = 0; i < kNumEmotions; ++i) {
    p.distribution[i] /= sum;
    if (p.distribution[i] > p.distribution[best]) best = i;
  }
  p.label = kAllEmotions[best];
  return p;
}

ClassifierModel::ClassifierModel(ClassifierConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(derive_seed(cfg_.init_seed, "classifier"));
  backbone_ = make_backbone(cfg_.backbone, store_, cfg_.grid, cfg_.channels, rng);
  for (const auto& name : backbone_->parameter_names()) store_.set_frozen(name, true);
  const int d = cfg_.model_dim();
  gru1_ = nn::BiGru(store_, "gru1", cfg_.channels, cfg_.gru_hidden, rng);
  gru2_ = nn::BiGru(store_, "gru2", d, cfg_.gru_hidden, rng);
  attention_ = nn::MultiHeadAttention(store_, "attention", d, cfg_.attention_heads, 1.0 / std::sqrt(d), rng);
  fc_ = nn::Linear(store_, "fc", d, cfg_.num_classes, cfg_.head_init_std, rng);
  store_.add_zeros(kCenter, 1, d);
  store_.set_frozen(kCenter, true);
}

std::vector<std::string> ClassifierModel::head_parameter_names() const {
  std::vector<std::string> out;
  for (const auto& n : store_.names()) {
    if (!store_.frozen(n)) out.push_back(n);
  }
  return out;
}

Matrix ClassifierModel::features(const Image& img) const { return backbone_->features(store_, img); }

Var ClassifierModel::pool(const Matrix& features) {
  const Var seq = nn::constant(features);
  const Var h1 = gru1_(store_, seq);
  const Var h2 = gru2_(store_, h1);
  const Var attended = attention_(store_, h2, h2, false);
  return nn::mean_rows(attended);
}

void ClassifierModel::refresh_center(const std::vector<Matrix>& features) {
  if (features.empty()) return;
  Matrix sum = Matrix::Zero(1, cfg_.model_dim());
  for (const auto& f : features) sum += pool(f).value();
  store_.at(kCenter).mutable_value() = sum / static_cast<double>(features.size());
}

Var ClassifierModel::logits_from_features(const Matrix& features, Rng* dropout_rng) {
  Var pooled = nn::sub(pool(features), store_.at(kCenter));
  if (dropout_rng != nullptr && cfg_.dropout > 0.0) {
    const double keep = 1.0 - cfg_.dropout;
    Matrix mask(1, pooled.cols());
    for (Eigen::Index j = 0; j < mask.cols(); ++j) mask(0, j) = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
    pooled = nn::apply_mask(pooled, mask);
  }
  return fc_(store_, pooled);
}

Matrix ClassifierModel::logits(const Image& img) const {
  // Inference never samples dropout, so the const_cast only builds a graph
  // that is discarded immediately.
  return const_cast<ClassifierModel*>(this)->logits_from_features(features(img), nullptr).value();
}

EmotionPrediction predict_emotion(const TrainedClassifier& model, const Image& img) {
  return prediction_from_logits(model.logits(img));
}

EmotionPrediction predict_emotion(const TrainedClassifier& model, const std::filesystem::path& image_path) {
  return predict_emotion(model, load_image(image_path));
}

namespace {

double sample_loss(const Matrix& logits, Emotion label) {
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  return lse - logits(static_cast<Eigen::Index>(index_of(label)));
}

}  // namespace

std::pair<double, double> evaluate_classifier(const ClassifierModel& model, const std::vector<LabeledImage>& data) {
  if (data.empty()) return {0.0, 0.0};
  double loss = 0.0;
  int correct = 0;
  for (const auto& ex : data) {
    const Matrix logits = model.logits(ex.image);
    loss += sample_loss(logits, ex.label);
    correct += prediction_from_logits(logits).label == ex.label ? 1 : 0;
  }
  return {loss / static_cast<double>(data.size()), static_cast<double>(correct) / static_cast<double>(data.size())};
}

ClassifierHistory train_classifier(ClassifierModel& model, std::vector<LabeledImage> train,
                                   std::vector<LabeledImage> eval, const ClassifierTrainConfig& cfg) {
  if (train.empty()) throw ValidationError("classifier training set is empty");
  if (cfg.batch_size <= 0 || cfg.epochs <= 0 || !(cfg.learning_rate > 0.0) || cfg.warmup_steps < 0) {
    throw ValidationError("classifier batch size, epochs and learning rate must be positive");
  }
  std::array<int, kNumEmotions> per_class{};
  for (const auto& ex : train) per_class[index_of(ex.label)]++;
  for (Emotion e : kAllEmotions) {
    if (per_class[index_of(e)] == 0) {
      throw ValidationError("class \"" + std::string(to_string(e)) + "\" is absent from the training data");
    }
  }
  const long steps_per_epoch = (static_cast<long>(train.size()) + cfg.batch_size - 1) / cfg.batch_size;
  const long total_steps = steps_per_epoch * cfg.epochs;
  if (cfg.warmup_steps > total_steps) {
    throw ValidationError("warmup_steps (" + std::to_string(cfg.warmup_steps) + ") exceeds total steps (" +
                          std::to_string(total_steps) + ")");
  }

  auto by_id = [](const LabeledImage& a, const LabeledImage& b) { return a.id < b.id; };
  std::sort(train.begin(), train.end(), by_id);
  std::sort(eval.begin(), eval.end(), by_id);

  // The backbone is frozen, so its features are computed once.
  std::vector<Matrix> feats;
  feats.reserve(train.size());
  for (const auto& ex : train) feats.push_back(model.features(ex.image));

  nn::ParameterStore& params = model.parameters();
  nn::AdamW opt({0.9, 0.999, 1e-8, cfg.weight_decay});
  ClassifierHistory history;
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::uint8_t> best_snapshot = params.serialize();
  int since_best = 0;
  long step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng order_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    Rng dropout_rng(derive_seed(cfg.seed ^ 0xd50f0u, static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    order_rng.shuffle(order);
    model.refresh_center(feats);
    double lr = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      params.zero_grad();
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        const Var logits = model.logits_from_features(feats[i], &dropout_rng);
        const int target = static_cast<int>(index_of(train[i].label));
        nn::backward(nn::cross_entropy(logits, std::span<const int>(&target, 1)), inv_batch);
      }
      lr = nn::cosine_with_warmup(cfg.learning_rate, ++step, cfg.warmup_steps, total_steps);
      opt.step(params, lr);
    }
    params.zero_grad();

    ClassifierEpoch stats;
    stats.epoch = epoch;
    stats.learning_rate = lr;
    std::tie(stats.train_loss, stats.train_accuracy) = evaluate_classifier(model, train);
    if (!eval.empty()) std::tie(stats.eval_loss, stats.eval_accuracy) = evaluate_classifier(model, eval);
    history.epochs.push_back(stats);
    spdlog::debug("classifier epoch {}: train loss {:.5f} acc {:.3f} eval loss {:.5f} lr {:.2e}", epoch,
                  stats.train_loss, stats.train_accuracy, stats.eval_loss, lr);

    const double monitored = eval.empty() ? stats.train_loss : stats.eval_loss;
    if (!std::isfinite(monitored)) throw Error("classifier loss became non-finite at epoch " + std::to_string(epoch));
    if (monitored < best) {
      best = monitored;
      best_snapshot = params.serialize();
      history.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      history.early_stopped = true;
      break;
    }
  }
  params.deserialize(best_snapshot);
  return history;
}

void save_classifier(const ClassifierModel& model, const std::filesystem::path& path) {
  model.parameters().save(path);
  const auto& c = model.config();
  nlohmann::json classes = nlohmann::json::array();
  for (Emotion e : kAllEmotions) classes.push_back(std::string(to_string(e)));
  nlohmann::json side = {
      {"kind", "emotion-classifier"},
      {"config",
       {{"backbone", c.backbone},
        {"grid", c.grid},
        {"channels", c.channels},
        {"gru_hidden", c.gru_hidden},
        {"gru_layers", c.gru_layers},
        {"attention_heads", c.attention_heads},
        {"dropout", c.dropout},
        {"num_classes", c.num_classes},
        {"head_init_std", c.head_init_std},
        {"init_seed", c.init_seed}}},
      {"class_order", classes},
      {"parameter_hash", model.parameters().hash()},
  };
  std::ofstream out(path.string() + ".json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string() + ".json");
  out << side.dump(2) << "\n";
}

std::unique_ptr<ClassifierModel> load_classifier(const std::filesystem::path& path) {
  const std::string side_path = path.string() + ".json";
  std::ifstream in(side_path);
  if (!in) throw IoError("classifier sidecar not found: " + side_path);
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(side_path + ": malformed sidecar: " + e.what());
  }
  if (side.value("kind", "") != "emotion-classifier") throw IoError(side_path + ": not an emotion classifier");
  std::vector<std::string> expected;
  for (Emotion e : kAllEmotions) expected.emplace_back(to_string(e));
  if (side.at("class_order").get<std::vector<std::string>>() != expected) {
    throw IoError(side_path + ": class order differs from " + legal_emotion_list());
  }
  const auto& j = side.at("config");
  ClassifierConfig c;
  c.backbone = j.at("backbone").get<std::string>();
  c.grid = j.at("grid").get<int>();
  c.channels = j.at("channels").get<int>();
  c.gru_hidden = j.at("gru_hidden").get<int>();
  c.gru_layers = j.at("gru_layers").get<int>();
  c.attention_heads = j.at("attention_heads").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.num_classes = j.at("num_classes").get<int>();
  c.head_init_std = j.at("head_init_std").get<double>();
  c.init_seed = j.at("init_seed").get<std::uint64_t>();
  auto model = std::make_unique<ClassifierModel>(c);
  model->parameters().load(path);
  if (side.contains("parameter_hash") && side["parameter_hash"] != model->parameters().hash()) {
    throw IoError(path.string() + ": parameter hash does not match its sidecar");
  }
  return model;
}

}  // namespace p2m::emotion
