#include "p2m/pipeline/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "p2m/core/error.hpp"
#include "p2m/core/hash.hpp"

namespace p2m::pipeline {

using nlohmann::json;

namespace {

class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ValidationError(where_ + " must be an object");
  }
  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ValidationError(where_ + "." + key + " has the wrong type");
    }
  }
  void allow(const char* key) { seen_.insert(key); }
  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ValidationError("unknown key " + where_ + "." + k);
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::chrono::milliseconds timeout_of(const BackendSpec& s) {
  return std::chrono::milliseconds(static_cast<long>(s.timeout_seconds * 1000.0));
}

const BackendSpec& lookup(const PipelineConfig& cfg, const std::string& name, std::string& resolved_kind) {
  static const BackendSpec builtin_toy{};
  auto it = cfg.backends.find(name);
  if (it == cfg.backends.end()) {
    if (name == "toy") {
      resolved_kind = "toy";
      return builtin_toy;
    }
    throw ValidationError("backend \"" + name + "\" is not in the config registry");
  }
  resolved_kind = it->second.kind;
  return it->second;
}

}  // namespace

void PipelineConfig::validate() const {
  for (const auto& [name, spec] : backends) {
    if (spec.kind != "toy" && spec.kind != "command" && spec.kind != "http") {
      throw ValidationError("backend \"" + name + "\" has unknown kind \"" + spec.kind + "\" (toy, command, http)");
    }
    if (spec.kind != "toy" && spec.locator.empty()) throw ValidationError("backend \"" + name + "\" needs a locator");
    if (!(spec.timeout_seconds > 0.0)) throw ValidationError("backend \"" + name + "\" timeout must be > 0");
    if (spec.retries < 0) throw ValidationError("backend \"" + name + "\" retries must be >= 0");
  }
  for (const auto& role : kRoles) {
    const auto name = backend_name(role);
    if (name != "toy" && !backends.count(name)) {
      throw ValidationError("role " + std::string(role) + " refers to missing backend \"" + name + "\"");
    }
  }
  for (const auto& [role, name] : roles) {
    if (std::find_if(std::begin(kRoles), std::end(kRoles), [&](const char* r) { return role == r; }) ==
        std::end(kRoles)) {
      throw ValidationError("unknown role \"" + role + "\"");
    }
  }
  auto positive = [](const char* section, int batch, int epochs, double lr, long warmup, int patience, double wd) {
    const std::string s(section);
    if (batch <= 0) throw ValidationError(s + ".batch_size must be positive");
    if (epochs <= 0) throw ValidationError(s + ".epochs must be positive");
    if (!(lr > 0.0)) throw ValidationError(s + ".learning_rate must be positive");
    if (warmup < 0) throw ValidationError(s + ".warmup_steps must be >= 0");
    if (patience <= 0) throw ValidationError(s + ".patience must be positive");
    if (wd < 0.0) throw ValidationError(s + ".weight_decay must be >= 0");
  };
  positive("training", training.batch_size, training.epochs, training.learning_rate, training.warmup_steps,
           training.patience, training.weight_decay);
  const auto& ct = classifier_training;
  positive("classifier_training", ct.batch_size, ct.epochs, ct.learning_rate, ct.warmup_steps, ct.patience,
           ct.weight_decay);
  sampling.validate();
  if (freeze_policy) freeze_policy->validate();
  classifier.validate();
  music_model.validate();
}

std::string PipelineConfig::backend_name(const std::string& role) const {
  auto it = roles.find(role);
  return it == roles.end() ? "toy" : it->second;
}

const BackendSpec& PipelineConfig::backend_for(const std::string& role) const {
  std::string kind;
  return lookup(*this, backend_name(role), kind);
}

gen::FreezePolicy PipelineConfig::effective_freeze_policy() const {
  return freeze_policy ? *freeze_policy : gen::FreezePolicy::for_variant(variant);
}

std::string PipelineConfig::hash() const { return sha256_hex(canonical); }

void PipelineConfig::override_seed(std::uint64_t s) {
  seed = s;
  sampling.seed = s;
  training.seed = s;
  classifier_training.seed = s;
}

PipelineConfig default_config() { return parse_config("{}", std::filesystem::current_path()); }

PipelineConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir,
                            std::string_view origin) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string(origin) + ": malformed JSON: " + e.what());
  }
  PipelineConfig cfg;
  try {
    Section top(doc, "config");
    std::string variant = "optimized";
    top.read("variant", variant);
    cfg.variant = text::parse_variant(variant);
    top.read("seed", cfg.seed);

    json backends = json::object(), roles = json::object(), paths = json::object();
    json training = json::object(), sampling = json::object(), cls = json::object(), clst = json::object();
    json model = json::object();
    std::optional<json> freeze;
    top.read("backends", backends);
    top.read("roles", roles);
    top.read("paths", paths);
    top.read("training", training);
    top.read("sampling", sampling);
    top.read("classifier", cls);
    top.read("classifier_training", clst);
    top.read("music_model", model);
    if (doc.contains("freeze_policy")) freeze = doc["freeze_policy"];
    top.allow("freeze_policy");
    top.finish();

    if (!backends.is_object()) throw ValidationError("config.backends must be an object");
    for (const auto& [name, spec] : backends.items()) {
      Section s(spec, "backends." + name);
      BackendSpec b;
      s.read("kind", b.kind);
      s.read("locator", b.locator);
      s.read("timeout_seconds", b.timeout_seconds);
      s.read("retries", b.retries);
      s.finish();
      cfg.backends[name] = b;
    }
    if (!roles.is_object()) throw ValidationError("config.roles must be an object");
    for (const auto& [role, name] : roles.items()) {
      if (!name.is_string()) throw ValidationError("roles." + role + " must name a backend");
      cfg.roles[role] = name.get<std::string>();
    }
    {
      Section s(paths, "paths");
      std::string manifest, cache = "cache", checkpoints = "checkpoints", output = "out";
      s.read("manifest", manifest);
      s.read("cache", cache);
      s.read("checkpoints", checkpoints);
      s.read("output", output);
      s.finish();
      cfg.paths = {resolve(base_dir, manifest), resolve(base_dir, cache), resolve(base_dir, checkpoints),
                   resolve(base_dir, output)};
    }
    {
      Section s(training, "training");
      s.read("batch_size", cfg.training.batch_size);
      s.read("epochs", cfg.training.epochs);
      s.read("learning_rate", cfg.training.learning_rate);
      s.read("warmup_steps", cfg.training.warmup_steps);
      s.read("patience", cfg.training.patience);
      s.read("weight_decay", cfg.training.weight_decay);
      s.finish();
    }
    if (freeze) {
      Section s(*freeze, "freeze_policy");
      gen::FreezePolicy f;
      s.read("freeze_text_encoder", f.freeze_text_encoder);
      s.read("frozen_transformer_fraction", f.frozen_transformer_fraction);
      s.finish();
      cfg.freeze_policy = f;
    }
    {
      Section s(sampling, "sampling");
      s.read("top_k", cfg.sampling.top_k);
      s.read("temperature", cfg.sampling.temperature);
      s.read("max_seconds", cfg.sampling.max_seconds);
      s.finish();
    }
    {
      Section s(cls, "classifier");
      s.read("backbone", cfg.classifier.backbone);
      s.read("grid", cfg.classifier.grid);
      s.read("channels", cfg.classifier.channels);
      s.read("gru_hidden", cfg.classifier.gru_hidden);
      s.read("gru_layers", cfg.classifier.gru_layers);
      s.read("attention_heads", cfg.classifier.attention_heads);
      s.read("dropout", cfg.classifier.dropout);
      s.read("num_classes", cfg.classifier.num_classes);
      s.read("head_init_std", cfg.classifier.head_init_std);
      s.finish();
    }
    {
      Section s(clst, "classifier_training");
      s.read("batch_size", cfg.classifier_training.batch_size);
      s.read("epochs", cfg.classifier_training.epochs);
      s.read("learning_rate", cfg.classifier_training.learning_rate);
      s.read("warmup_steps", cfg.classifier_training.warmup_steps);
      s.read("patience", cfg.classifier_training.patience);
      s.read("weight_decay", cfg.classifier_training.weight_decay);
      s.finish();
    }
    {
      Section s(model, "music_model");
      s.read("d_model", cfg.music_model.d_model);
      s.read("heads", cfg.music_model.heads);
      s.read("layers", cfg.music_model.layers);
      s.read("mlp_dim", cfg.music_model.mlp_dim);
      s.read("head_init_std", cfg.music_model.head_init_std);
      s.finish();
    }
    cfg.override_seed(cfg.seed);
    cfg.classifier.init_seed = cfg.seed;
    cfg.music_model.init_seed = cfg.seed;
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(origin) + ": " + e.what());
  }

  // Canonical form: the document with every default filled in.
  json canon = doc;
  canon["variant"] = std::string(text::to_string(cfg.variant));
  canon["seed"] = cfg.seed;
  json reg = json::object();
  for (const auto& [n, b] : cfg.backends) {
    reg[n] = {{"kind", b.kind}, {"locator", b.locator}, {"timeout_seconds", b.timeout_seconds}, {"retries", b.retries}};
  }
  canon["backends"] = reg;
  json roles_out = json::object();
  for (const auto& role : kRoles) roles_out[role] = cfg.backend_name(role);
  canon["roles"] = roles_out;
  const auto& t = cfg.training;
  canon["training"] = {{"batch_size", t.batch_size},     {"epochs", t.epochs},     {"learning_rate", t.learning_rate},
                       {"warmup_steps", t.warmup_steps}, {"patience", t.patience}, {"weight_decay", t.weight_decay}};
  const auto fp = cfg.effective_freeze_policy();
  canon["freeze_policy"] = {{"freeze_text_encoder", fp.freeze_text_encoder},
                            {"frozen_transformer_fraction", fp.frozen_transformer_fraction}};
  canon["sampling"] = {{"top_k", cfg.sampling.top_k},
                       {"temperature", cfg.sampling.temperature},
                       {"max_seconds", cfg.sampling.max_seconds}};
  cfg.canonical = canon.dump(2) + "\n";
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto cfg = parse_config(ss.str(), std::filesystem::absolute(path).parent_path(), path.string());
  if (const char* root = std::getenv("P2M_CACHE_ROOT"); root != nullptr && *root != '\0') cfg.paths.cache = root;
  return cfg;
}

std::unique_ptr<text::CaptionBackend> make_captioner(const PipelineConfig& cfg, const std::string& name) {
  std::string kind;
  const auto& spec = lookup(cfg, name, kind);
  if (kind == "toy") return std::make_unique<text::ToyCaptioner>();
  if (kind == "command") return std::make_unique<text::CommandCaptioner>(spec.locator, timeout_of(spec));
  throw BackendError("backend \"" + name + "\" of kind " + kind + " cannot caption images");
}

std::unique_ptr<text::LlmBackend> make_llm(const PipelineConfig& cfg, const std::string& name) {
  std::string kind;
  const auto& spec = lookup(cfg, name, kind);
  if (kind == "toy") return std::make_unique<text::ToyLlm>();
  if (kind == "command") return std::make_unique<text::CommandLlm>(spec.locator, timeout_of(spec));
  return std::make_unique<text::HttpLlm>(spec.locator, timeout_of(spec));
}

namespace {

void require_toy(const PipelineConfig& cfg, const std::string& role) {
  std::string kind;
  lookup(cfg, cfg.backend_name(role), kind);
  if (kind != "toy") throw BackendError("role " + role + " supports only in-process backends (kind toy)");
}

std::string toy_or(const PipelineConfig& cfg, const std::string& name) {
  std::string kind;
  const auto& spec = lookup(cfg, name, kind);
  if (kind != "toy") throw BackendError("backend \"" + name + "\" must be of kind toy");
  return spec.locator.empty() ? "toy" : spec.locator;
}

}  // namespace

std::unique_ptr<gen::AudioTokenizer> make_codec(const PipelineConfig& cfg) {
  require_toy(cfg, "codec");
  return gen::make_audio_tokenizer(toy_or(cfg, cfg.backend_name("codec")));
}

std::unique_ptr<gen::TextEncoder> make_text_encoder(const PipelineConfig& cfg) {
  require_toy(cfg, "text_encoder");
  return gen::make_text_encoder(toy_or(cfg, cfg.backend_name("text_encoder")));
}

std::unique_ptr<metrics::AudioEmbedder> make_embedder(const PipelineConfig& cfg, const std::string& name) {
  if (!cfg.backends.count(name) && name != "toy") return metrics::make_embedder(name);
  return metrics::make_embedder(toy_or(cfg, name));
}

std::unique_ptr<metrics::AudioClassifier> make_audio_classifier(const PipelineConfig& cfg, const std::string& name) {
  if (!cfg.backends.count(name) && name != "toy") return metrics::make_audio_classifier(name);
  return metrics::make_audio_classifier(toy_or(cfg, name));
}

std::unique_ptr<metrics::ClapModel> make_clap(const PipelineConfig& cfg, const std::string& name) {
  if (!cfg.backends.count(name) && name != "toy") return metrics::make_clap(name);
  return metrics::make_clap(toy_or(cfg, name));
}

}  // namespace p2m::pipeline
