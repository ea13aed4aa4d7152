#include "p2m/generation/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "p2m/audio/wav.hpp"
#include "p2m/core/hash.hpp"
#include "p2m/core/parallel.hpp"
#include "p2m/nn/optim.hpp"

namespace p2m::gen {

using nlohmann::json;

void TrainingConfig::validate(std::size_t train_size) const {
  if (batch_size < 1 || epochs < 1 || patience < 1) throw ValidationError("batch_size, epochs and patience must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning_rate must be > 0");
  if (weight_decay < 0.0) throw ValidationError("weight_decay must be >= 0");
  if (warmup_steps < 0) throw ValidationError("warmup_steps must be >= 0");
  const long total = total_steps(train_size);
  if (warmup_steps > total) {
    throw ValidationError("warmup_steps (" + std::to_string(warmup_steps) + ") exceeds total steps (" +
                          std::to_string(total) + " = " + std::to_string(epochs) + " epochs x " +
                          std::to_string(total / epochs) + " batches)");
  }
}

long TrainingConfig::total_steps(std::size_t train_size) const {
  const long per_epoch = (static_cast<long>(train_size) + batch_size - 1) / batch_size;
  return per_epoch * epochs;
}

void FreezePolicy::validate() const {
  if (!(frozen_transformer_fraction >= 0.0 && frozen_transformer_fraction <= 1.0)) {
    throw ValidationError("frozen_transformer_fraction must be in [0, 1]");
  }
}

int FreezePolicy::frozen_layers(int layers) const {
  return static_cast<int>(std::floor(frozen_transformer_fraction * layers + 1e-9));
}

FreezePolicy FreezePolicy::for_variant(text::Variant v) {
  return v == text::Variant::Optimized ? FreezePolicy{true, 0.5} : FreezePolicy{true, 0.0};
}

std::vector<std::string> apply_freeze_policy(MusicLmBackend& model, const FreezePolicy& policy) {
  policy.validate();
  auto& store = model.parameters();
  for (const auto& n : store.names()) store.set_frozen(n, false);
  std::vector<std::string> frozen;
  auto freeze = [&](const std::vector<std::string>& names) {
    for (const auto& n : names) {
      store.set_frozen(n, true);
      frozen.push_back(n);
    }
  };
  if (policy.freeze_text_encoder) freeze(model.text_encoder_parameter_names());
  const int n = policy.frozen_layers(model.num_layers());
  if (n > 0) freeze(model.embedding_parameter_names());
  for (int i = 0; i < n; ++i) freeze(model.layer_parameter_names(i));
  return frozen;
}

double mean_loss(const MusicLmBackend& model, const std::vector<FinetuneExample>& data) {
  if (data.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& ex : data) sum += model.loss(ex.tokens, ex.text).scalar();
  return sum / static_cast<double>(data.size());
}

FinetuneHistory finetune(MusicLmBackend& model, std::vector<FinetuneExample> train, std::vector<FinetuneExample> eval,
                         const TrainingConfig& cfg, const FreezePolicy& policy) {
  if (train.empty()) throw ValidationError("finetune: the train split is empty");
  cfg.validate(train.size());
  FinetuneHistory history;
  history.frozen = apply_freeze_policy(model, policy);
  auto by_id = [](const FinetuneExample& a, const FinetuneExample& b) { return a.id < b.id; };
  std::sort(train.begin(), train.end(), by_id);
  std::sort(eval.begin(), eval.end(), by_id);
  history.eval_fell_back_to_train = eval.empty();
  const auto& monitor = eval.empty() ? train : eval;

  auto& params = model.parameters();
  nn::AdamW opt({0.9, 0.999, 1e-8, cfg.weight_decay});
  const long total = cfg.total_steps(train.size());
  double best = std::numeric_limits<double>::infinity();
  auto best_snapshot = params.serialize();
  int since_best = 0;
  long step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng order_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    order_rng.shuffle(order);
    double lr = 0.0;
    double train_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      params.zero_grad();
      for (std::size_t b = start; b < end; ++b) {
        const auto& ex = train[order[b]];
        const nn::Var l = model.loss(ex.tokens, ex.text);
        train_sum += l.scalar();
        nn::backward(l, 1.0 / static_cast<double>(end - start));
      }
      lr = nn::cosine_with_warmup(cfg.learning_rate, ++step, cfg.warmup_steps, total);
      opt.step(params, lr);
    }
    params.zero_grad();
    FinetuneEpoch e;
    e.epoch = epoch;
    e.learning_rate = lr;
    e.train_loss = train_sum / static_cast<double>(train.size());
    e.eval_loss = mean_loss(model, monitor);
    history.epochs.push_back(e);
    spdlog::info("finetune epoch {}: train loss {:.5f} eval loss {:.5f} lr {:.3g}", epoch, e.train_loss,
                 e.eval_loss, lr);
    if (!std::isfinite(e.train_loss) || !std::isfinite(e.eval_loss)) {
      params.deserialize(best_snapshot);
      throw TrainingAborted("loss became non-finite at epoch " + std::to_string(epoch) +
                                "; parameters restored to epoch " + std::to_string(history.best_epoch),
                            history);
    }
    if (e.eval_loss < best) {
      best = e.eval_loss;
      best_snapshot = params.serialize();
      history.best_epoch = epoch;
      history.best_eval_loss = best;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      history.early_stopped = true;
      break;
    }
  }
  params.deserialize(best_snapshot);
  return history;
}

namespace {

std::string sample_text(const PairedSample& s, text::Variant v) {
  try {
    return text::text_for_variant(v, {s.emotion, s.caption, s.enhanced_description});
  } catch (const ValidationError& e) {
    throw ValidationError("sample " + s.id + ": " + e.what());
  }
}

std::vector<const PairedSample*> training_samples(const Manifest& m) {
  auto out = m.in_split(Split::Train);
  const auto ev = m.in_split(Split::Eval);
  out.insert(out.end(), ev.begin(), ev.end());
  return out;
}

std::string audio_key(const AudioTokenizer& codec, const std::filesystem::path& audio) {
  return sha256_hex(codec.id() + "\n" + sha256_file(audio));
}

std::string text_key(const TextEncoder& encoder, const std::string& text) {
  return sha256_hex(encoder.id() + "\n" + text);
}

bool write_if_absent(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (std::filesystem::exists(path)) return false;
  write_file_atomic(path, bytes);
  return true;
}

}  // namespace

std::filesystem::path cache_index_path(const std::filesystem::path& cache_dir, text::Variant v) {
  return cache_dir / ("index-" + std::string(text::to_string(v)) + ".json");
}

PrecomputeResult precompute_tensors(const Manifest& manifest, const std::filesystem::path& manifest_dir,
                                    text::Variant variant, const AudioTokenizer& codec, const TextEncoder& encoder,
                                    const std::filesystem::path& cache_dir, unsigned threads) {
  const auto samples = training_samples(manifest);
  std::vector<std::string> texts;
  for (const auto* s : samples) texts.push_back(sample_text(*s, variant));

  std::error_code ec;
  std::filesystem::create_directories(cache_dir / "audio", ec);
  std::filesystem::create_directories(cache_dir / "text", ec);
  if (ec) throw IoError("cannot create cache directory " + cache_dir.string() + ": " + ec.message());

  struct Entry {
    std::string audio, text;
    bool audio_new = false, text_new = false;
  };
  std::vector<Entry> entries(samples.size());
  std::mutex write_mutex;
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    const auto& s = *samples[i];
    const auto audio_path = manifest_dir / s.audio_path;
    try {
      Entry e;
      e.audio = "audio/" + audio_key(codec, audio_path) + ".tok";
      e.text = "text/" + text_key(encoder, texts[i]) + ".emb";
      if (!std::filesystem::exists(cache_dir / e.audio)) {
        const auto grid = encode_audio(codec, audio::read_wav(audio_path));
        std::lock_guard lock(write_mutex);
        e.audio_new = write_if_absent(cache_dir / e.audio, grid.serialize());
      }
      if (!std::filesystem::exists(cache_dir / e.text)) {
        const auto emb = encode_text(encoder, texts[i]);
        std::lock_guard lock(write_mutex);
        e.text_new = write_if_absent(cache_dir / e.text, emb.serialize());
      }
      entries[i] = e;
    } catch (const Error& err) {
      throw IoError("precompute failed for sample " + s.id + ": " + err.what());
    }
  });

  json index = {{"variant", std::string(text::to_string(variant))},
                {"codec", codec.id()},
                {"text_encoder", encoder.id()},
                {"samples", json::object()}};
  PrecomputeResult r;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    index["samples"][samples[i]->id] = {{"audio", entries[i].audio},
                                        {"text", entries[i].text},
                                        {"split", std::string(to_string(samples[i]->split))}};
    r.audio_written += entries[i].audio_new ? 1 : 0;
    r.text_written += entries[i].text_new ? 1 : 0;
  }
  r.entries = samples.size();
  r.index_path = cache_index_path(cache_dir, variant);
  const std::string dumped = index.dump(2) + "\n";
  std::string existing;
  if (std::filesystem::exists(r.index_path)) {
    const auto bytes = read_file_bytes(r.index_path);
    existing.assign(bytes.begin(), bytes.end());
  }
  if (existing != dumped) {
    write_file_atomic(r.index_path, std::vector<std::uint8_t>(dumped.begin(), dumped.end()));
    r.index_written = true;
  }
  return r;
}

TrainingSet load_training_set(const Manifest& manifest, const std::filesystem::path& manifest_dir,
                              text::Variant variant, const AudioTokenizer& codec, const TextEncoder& encoder,
                              const std::optional<std::filesystem::path>& cache_dir) {
  if (variant == text::Variant::Optimized && !cache_dir) {
    throw ValidationError("the optimized variant trains from precomputed tensors; run precompute and pass the cache");
  }
  TrainingSet set;
  std::optional<json> index;
  if (cache_dir) {
    const auto path = cache_index_path(*cache_dir, variant);
    if (!std::filesystem::exists(path)) throw IoError("cache index not found: " + path.string());
    std::ifstream in(path);
    try {
      index = json::parse(in);
    } catch (const json::exception& e) {
      throw IoError(path.string() + ": " + e.what());
    }
    if ((*index).value("codec", "") != codec.id() || (*index).value("text_encoder", "") != encoder.id()) {
      throw BackendError(path.string() + " was built with other backends (" + (*index).value("codec", "?") + ", " +
                         (*index).value("text_encoder", "?") + ")");
    }
  }
  for (const auto* s : training_samples(manifest)) {
    FinetuneExample ex;
    ex.id = s->id;
    if (index) {
      const auto& samples = (*index)["samples"];
      if (!samples.contains(s->id)) throw IoError("sample " + s->id + " is missing from the cache index; rerun precompute");
      const auto& entry = samples[s->id];
      const auto text_now = "text/" + text_key(encoder, sample_text(*s, variant)) + ".emb";
      if (entry.at("text").get<std::string>() != text_now) {
        throw IoError("cached text for sample " + s->id + " is stale; rerun precompute");
      }
      const auto tok_path = *cache_dir / entry.at("audio").get<std::string>();
      const auto emb_path = *cache_dir / entry.at("text").get<std::string>();
      ex.tokens = TokenGrid::deserialize(read_file_bytes(tok_path), tok_path.string());
      ex.text = EmbeddingSeq::deserialize(read_file_bytes(emb_path), emb_path.string());
    } else {
      ex.tokens = encode_audio(codec, audio::read_wav(manifest_dir / s->audio_path));
      ex.text = encode_text(encoder, sample_text(*s, variant));
    }
    (s->split == Split::Train ? set.train : set.eval).push_back(std::move(ex));
  }
  return set;
}

void save_music_checkpoint(const MusicCheckpoint& ckpt, const std::filesystem::path& path) {
  if (!ckpt.model) throw ValidationError("checkpoint has no model");
  const auto blob = ckpt.model->parameters().serialize();
  write_file_atomic(path, blob);
  const auto& c = ckpt.model->config();
  const auto& t = ckpt.training;
  json side = {
      {"kind", "music-lm"},
      {"model", ckpt.model->id()},
      {"model_config",
       {{"codebooks", c.codebooks},
        {"codebook_size", c.codebook_size},
        {"d_model", c.d_model},
        {"heads", c.heads},
        {"layers", c.layers},
        {"mlp_dim", c.mlp_dim},
        {"text_dim", c.text_dim},
        {"head_init_std", c.head_init_std},
        {"init_seed", c.init_seed}}},
      {"variant", std::string(text::to_string(ckpt.variant))},
      {"codec", ckpt.codec_id},
      {"text_encoder", ckpt.text_encoder_id},
      {"training",
       {{"batch_size", t.batch_size},
        {"epochs", t.epochs},
        {"optimizer", "adamw"},
        {"learning_rate", t.learning_rate},
        {"schedule", "cosine"},
        {"warmup_steps", t.warmup_steps},
        {"patience", t.patience},
        {"weight_decay", t.weight_decay},
        {"seed", t.seed}}},
      {"freeze_policy",
       {{"freeze_text_encoder", ckpt.policy.freeze_text_encoder},
        {"frozen_transformer_fraction", ckpt.policy.frozen_transformer_fraction}}},
      {"content_hash", sha256_hex(std::as_bytes(std::span<const std::uint8_t>(blob)))},
  };
  const std::string text = side.dump(2) + "\n";
  write_file_atomic(path.string() + ".json", std::vector<std::uint8_t>(text.begin(), text.end()));
}

MusicCheckpoint load_music_checkpoint(const std::filesystem::path& path) {
  const std::string side_path = path.string() + ".json";
  if (!std::filesystem::exists(path)) throw IoError("music checkpoint not found: " + path.string());
  if (!std::filesystem::exists(side_path)) throw IoError("music checkpoint sidecar not found: " + side_path);
  json side;
  try {
    std::ifstream in(side_path);
    side = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(side_path + ": " + e.what());
  }
  if (side.value("kind", "") != "music-lm") throw IoError(side_path + ": not a music checkpoint");
  MusicCheckpoint ck;
  try {
    const auto& c = side.at("model_config");
    ToyMusicLmConfig mc;
    mc.codebooks = c.at("codebooks").get<int>();
    mc.codebook_size = c.at("codebook_size").get<int>();
    mc.d_model = c.at("d_model").get<int>();
    mc.heads = c.at("heads").get<int>();
    mc.layers = c.at("layers").get<int>();
    mc.mlp_dim = c.at("mlp_dim").get<int>();
    mc.text_dim = c.at("text_dim").get<int>();
    mc.head_init_std = c.at("head_init_std").get<double>();
    mc.init_seed = c.at("init_seed").get<std::uint64_t>();
    if (side.at("model").get<std::string>() != "toy-music-lm-v1") {
      throw BackendError("unsupported music model " + side.at("model").get<std::string>());
    }
    ck.model = std::make_unique<ToyMusicLm>(mc);
    ck.variant = text::parse_variant(side.at("variant").get<std::string>());
    ck.codec_id = side.at("codec").get<std::string>();
    ck.text_encoder_id = side.at("text_encoder").get<std::string>();
    const auto& t = side.at("training");
    ck.training.batch_size = t.at("batch_size").get<int>();
    ck.training.epochs = t.at("epochs").get<int>();
    ck.training.learning_rate = t.at("learning_rate").get<double>();
    ck.training.warmup_steps = t.at("warmup_steps").get<long>();
    ck.training.patience = t.at("patience").get<int>();
    ck.training.weight_decay = t.at("weight_decay").get<double>();
    ck.training.seed = t.at("seed").get<std::uint64_t>();
    const auto& f = side.at("freeze_policy");
    ck.policy.freeze_text_encoder = f.at("freeze_text_encoder").get<bool>();
    ck.policy.frozen_transformer_fraction = f.at("frozen_transformer_fraction").get<double>();
    ck.content_hash = side.at("content_hash").get<std::string>();
  } catch (const json::exception& e) {
    throw IoError(side_path + ": " + e.what());
  }
  const auto blob = read_file_bytes(path);
  if (sha256_hex(std::as_bytes(std::span<const std::uint8_t>(blob))) != ck.content_hash) {
    throw IoError(path.string() + ": content hash does not match its sidecar");
  }
  ck.model->parameters().deserialize(blob, path.string());
  return ck;
}

Waveform generate(const MusicCheckpoint& ckpt, const AudioTokenizer& codec, const TextEncoder& encoder,
                  const std::string& text, const SamplingConfig& scfg) {
  if (!ckpt.model) throw ValidationError("checkpoint has no model");
  scfg.validate();
  if (ckpt.codec_id != codec.id()) {
    throw BackendError("checkpoint was trained with codec " + ckpt.codec_id + " but " + codec.id() + " is configured");
  }
  if (ckpt.text_encoder_id != encoder.id()) {
    throw BackendError("checkpoint was trained with text encoder " + ckpt.text_encoder_id + " but " + encoder.id() +
                       " is configured");
  }
  if (text::collapse_whitespace(text).empty()) throw ValidationError("generation text is empty");
  const auto emb = encode_text(encoder, text);
  const int steps = static_cast<int>(std::lround(scfg.max_seconds * codec.frame_rate()));
  int k = scfg.top_k;
  if (k > codec.codebook_size()) {
    spdlog::warn("top_k {} exceeds codebook size {}; clamping", k, codec.codebook_size());
    k = codec.codebook_size();
  }
  Rng rng(derive_seed(scfg.seed, "generate"));
  const auto grid = ckpt.model->generate_tokens(emb, steps, k, scfg.temperature, codec.frame_rate(), rng);
  return codec.decode(grid);
}

}  // namespace p2m::gen
