#include "p2m/pipeline/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "p2m/audio/wav.hpp"
#include "p2m/dataset/curate.hpp"
#include "p2m/metrics/evaluate.hpp"
#include "p2m/pipeline/pipeline.hpp"
#include "p2m/pipeline/run_log.hpp"

namespace p2m::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string log_level = "warn";
  unsigned threads = 0;
};

PipelineConfig resolve_config(const Globals& g) {
  PipelineConfig cfg = g.config.empty() ? default_config() : load_config(g.config);
  if (g.config.empty()) {
    if (const char* root = std::getenv("P2M_CACHE_ROOT"); root != nullptr && *root != '\0') cfg.paths.cache = root;
  }
  if (g.seed) {
    cfg.override_seed(*g.seed);
    cfg.classifier.init_seed = *g.seed;
    cfg.music_model.init_seed = *g.seed;
  }
  return cfg;
}

/// Tracks one artifact-producing command and appends its RunRecord.
class Recorder {
 public:
  Recorder(std::string command, const PipelineConfig& cfg) {
    rec_.command = std::move(command);
    rec_.config_hash = cfg.hash();
    rec_.started_at = utc_now();
  }
  RunRecord& record() { return rec_; }
  void finish(const fs::path& log_dir) {
    rec_.finished_at = utc_now();
    append_run_record(run_log_path(log_dir), rec_);
  }

 private:
  RunRecord rec_;
};

fs::path parent_or_cwd(const fs::path& p) {
  const auto parent = fs::absolute(p).parent_path();
  return parent.empty() ? fs::current_path() : parent;
}

std::vector<emotion::LabeledImage> labeled_images(const Manifest& m, const fs::path& dir, Split split) {
  std::vector<emotion::LabeledImage> out;
  for (const auto* s : m.in_split(split)) out.push_back({s->id, load_image(dir / s->image_path), s->emotion});
  return out;
}

json prediction_json(const emotion::EmotionPrediction& p) {
  json d = json::object();
  for (Emotion e : kAllEmotions) d[std::string(to_string(e))] = p.distribution[index_of(e)];
  return {{"label", std::string(to_string(p.label))}, {"distribution", d}};
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Painting to music: curation, emotion labelling, text conditioning, generation and evaluation", "p2m"};
  app.set_version_flag("--version", std::string(P2M_VERSION));
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Pipeline config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Overrides the config seed everywhere");
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");

  // curate
  dataset::CurationConfig cur;
  std::string emotion_map, ratios;
  auto* curate = app.add_subcommand("curate", "Render, chunk, pair and split paintings with MIDI music");
  curate->add_option("--paintings", cur.paintings_dir, "Painting directory")->required()->check(CLI::ExistingDirectory);
  curate->add_option("--midi", cur.midi_dir, "MIDI directory")->required()->check(CLI::ExistingDirectory);
  curate->add_option("--out", cur.out_dir, "Output directory")->required();
  curate->add_option("--painting-labels", cur.painting_labels, "CSV path,emotion (default <paintings>/annotations.csv)");
  curate->add_option("--midi-labels", cur.midi_labels, "CSV path,cluster (default <midi>/annotations.csv)");
  curate->add_option("--emotion-map", emotion_map, "JSON cluster -> emotion map (default MIREX clusters)");
  curate->add_option("--ratios", ratios, "train,eval,test fractions (default 0.8,0.1,0.1)");
  curate->add_option("--chunk-seconds", cur.chunk_seconds, "Chunk length in seconds");

  // train-emotion
  fs::path manifest_path, ckpt_path, image_path, out_path;
  std::optional<int> epochs, batch, patience;
  std::optional<double> lr;
  std::optional<long> warmup;
  auto add_training = [&](CLI::App* c) {
    c->add_option("--epochs", epochs, "Training epochs");
    c->add_option("--batch-size", batch, "Batch size");
    c->add_option("--lr", lr, "Peak learning rate");
    c->add_option("--warmup", warmup, "Warmup steps");
    c->add_option("--patience", patience, "Early-stopping patience in epochs");
  };
  auto* train_emotion = app.add_subcommand("train-emotion", "Train the painting emotion classifier");
  train_emotion->add_option("--manifest", manifest_path, "Manifest")->required()->check(CLI::ExistingFile);
  train_emotion->add_option("--out", ckpt_path, "Checkpoint path")->required();
  add_training(train_emotion);

  auto* predict = app.add_subcommand("predict-emotion", "Predict the emotion of one painting");
  predict->add_option("--ckpt", ckpt_path, "Classifier checkpoint")->required()->check(CLI::ExistingFile);
  predict->add_option("--image", image_path, "Image")->required()->check(CLI::ExistingFile);

  std::string backend_name;
  auto* caption = app.add_subcommand("caption", "Fill emotion-conditioned captions into a manifest");
  caption->add_option("--manifest", manifest_path, "Manifest (rewritten in place)")->required()->check(CLI::ExistingFile);
  caption->add_option("--ckpt", ckpt_path, "Classifier checkpoint; without it the manifest labels condition captions");
  caption->add_option("--backend", backend_name, "Captioner backend name (default: config role)");

  auto* enhance = app.add_subcommand("enhance", "Fill LLM-enhanced descriptions into a manifest");
  enhance->add_option("--manifest", manifest_path, "Manifest (rewritten in place)")->required()->check(CLI::ExistingFile);
  enhance->add_option("--backend", backend_name, "LLM backend name (default: config role)");

  std::string variant_name;
  fs::path cache_dir;
  auto* precompute = app.add_subcommand("precompute", "Cache audio tokens and text embeddings");
  precompute->add_option("--manifest", manifest_path, "Manifest")->required()->check(CLI::ExistingFile);
  precompute->add_option("--variant", variant_name, "emotive, narrative, lyrical or optimized")->required();
  precompute->add_option("--cache", cache_dir, "Cache directory (default: config paths.cache)");

  std::optional<double> freeze_frac;
  auto* finetune = app.add_subcommand("finetune", "Fine-tune the music model for one variant");
  finetune->add_option("--manifest", manifest_path, "Manifest")->required()->check(CLI::ExistingFile);
  finetune->add_option("--variant", variant_name, "emotive, narrative, lyrical or optimized")->required();
  finetune->add_option("--cache", cache_dir, "Precompute cache (required for optimized)");
  finetune->add_option("--out", ckpt_path, "Checkpoint path")->required();
  finetune->add_option("--freeze-frac", freeze_frac, "Fraction of initial decoder layers to freeze")
      ->check(CLI::Range(0.0, 1.0));
  add_training(finetune);

  std::string text_arg;
  fs::path emotion_ckpt;
  std::optional<int> top_k;
  std::optional<double> temperature, seconds;
  auto* generate = app.add_subcommand("generate", "Generate music from text or from a painting");
  generate->add_option("--ckpt", ckpt_path, "Music checkpoint")->required();
  auto* text_opt = generate->add_option("--text", text_arg, "Conditioning text");
  auto* image_opt = generate->add_option("--image", image_path, "Painting; runs the full flow")->check(CLI::ExistingFile);
  text_opt->excludes(image_opt);
  generate->add_option("--emotion-ckpt", emotion_ckpt, "Classifier checkpoint for --image");
  generate->add_option("--out", out_path, "Output wav")->required();
  generate->add_option("--top-k", top_k, "Top-k");
  generate->add_option("--temperature", temperature, "Sampling temperature");
  generate->add_option("--seconds", seconds, "Duration in seconds");

  fs::path generated_dir, table_path;
  std::string embedder_name, classifier_name, clap_name = "toy", clap_template = "{emotion} song", split_name = "test",
                                               model_label = "model";
  auto* evaluate = app.add_subcommand("evaluate", "Score generated audio against the references");
  evaluate->add_option("--manifest", manifest_path, "Manifest")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--generated", generated_dir, "Directory of <id>.wav files")->required();
  evaluate->add_option("--embedder", embedder_name, "Audio embedder backend")->required();
  evaluate->add_option("--classifier", classifier_name, "Audio emotion classifier backend")->required();
  evaluate->add_option("--out", out_path, "Report JSON")->required();
  evaluate->add_option("--clap", clap_name, "CLAP backend");
  evaluate->add_option("--clap-text-template", clap_template, "CLAP text; {emotion} is replaced by the label");
  evaluate->add_option("--split", split_name, "train, eval, test or all")->check(CLI::IsMember({"train", "eval", "test", "all"}));
  evaluate->add_option("--model", model_label, "Row label in the table");
  evaluate->add_option("--table", table_path, "Markdown table output (default <out>.md)");

  fs::path out_dir;
  auto* run = app.add_subcommand("run", "Painting to music, end to end");
  run->add_option("--image", image_path, "Painting")->required()->check(CLI::ExistingFile);
  run->add_option("--ckpt", ckpt_path, "Music checkpoint")->required();
  run->add_option("--emotion-ckpt", emotion_ckpt, "Classifier checkpoint (default <checkpoints>/emotion.ckpt)");
  run->add_option("--out", out_dir, "Output directory (default: config paths.output)");
  std::string run_variant;
  run->add_option("--variant", run_variant, "Text variant (default: the one the checkpoint was trained for)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kExitOk;
    if (e.get_name() == "RequiredError" || e.get_name() == "ExtrasError" || e.get_name() == "ValidationError" ||
        e.get_name() == "RequiresError" || e.get_name() == "ExcludesError" || e.get_name() == "ArgumentMismatch" ||
        e.get_name() == "ConversionError" || e.get_name() == "FileError") {
      auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
      err << sub->help();
    }
    return kExitUsage;
  }
  spdlog::set_level(spdlog::level::from_str(g.log_level));
  spdlog::set_default_logger(spdlog::default_logger());

  try {
    PipelineConfig cfg = resolve_config(g);
    auto training_overrides = [&](gen::TrainingConfig& t) {
      if (epochs) t.epochs = *epochs;
      if (batch) t.batch_size = *batch;
      if (lr) t.learning_rate = *lr;
      if (warmup) t.warmup_steps = *warmup;
      if (patience) t.patience = *patience;
    };

    if (curate->parsed()) {
      Recorder rec("curate", cfg);
      cur.seed = static_cast<std::int64_t>(cfg.seed);
      cur.threads = g.threads;
      if (!emotion_map.empty()) cur.emotion_map = dataset::EmotionMap::load(emotion_map);
      if (!ratios.empty()) cur.ratios = SplitRatios::parse(ratios);
      const auto result = dataset::curate(cur, dataset::ToySineSynth());
      rec.record().add_input(cur.paintings_dir);
      rec.record().add_input(cur.midi_dir);
      rec.record().add_output(result.manifest_path);
      for (const auto& a : result.written_audio) rec.record().add_output(a);
      rec.finish(cur.out_dir);
      out << result.manifest_path.string() << "\n";
    } else if (train_emotion->parsed()) {
      Recorder rec("train-emotion", cfg);
      const auto manifest = load_manifest(manifest_path);
      const auto dir = parent_or_cwd(manifest_path);
      auto tc = cfg.classifier_training;
      if (epochs) tc.epochs = *epochs;
      if (batch) tc.batch_size = *batch;
      if (lr) tc.learning_rate = *lr;
      if (warmup) tc.warmup_steps = *warmup;
      if (patience) tc.patience = *patience;
      emotion::ClassifierModel model(cfg.classifier);
      const auto history = emotion::train_classifier(model, labeled_images(manifest, dir, Split::Train),
                                                     labeled_images(manifest, dir, Split::Eval), tc);
      emotion::save_classifier(model, ckpt_path);
      rec.record().add_input(manifest_path);
      rec.record().add_output(ckpt_path);
      rec.record().add_output(ckpt_path.string() + ".json");
      rec.finish(parent_or_cwd(ckpt_path));
      const auto& last = history.epochs.back();
      out << json{{"checkpoint", ckpt_path.string()},
                  {"epochs_run", history.epochs.size()},
                  {"best_epoch", history.best_epoch},
                  {"train_accuracy", last.train_accuracy},
                  {"train_loss", last.train_loss}}
                 .dump()
          << "\n";
    } else if (predict->parsed()) {
      const auto model = emotion::load_classifier(ckpt_path);
      out << prediction_json(emotion::predict_emotion(*model, image_path)).dump(2) << "\n";
    } else if (caption->parsed()) {
      Recorder rec("caption", cfg);
      rec.record().add_input(manifest_path);
      auto manifest = load_manifest(manifest_path);
      const auto dir = parent_or_cwd(manifest_path);
      const auto backend = make_captioner(cfg, backend_name.empty() ? cfg.backend_name("captioner") : backend_name);
      std::unique_ptr<emotion::ClassifierModel> classifier;
      if (!ckpt_path.empty()) classifier = emotion::load_classifier(ckpt_path);
      for (auto& s : manifest.samples) {
        const auto path = dir / s.image_path;
        const Image img = load_image(path);
        const Emotion e = classifier ? emotion::predict_emotion(*classifier, img).label : s.emotion;
        s.caption = text::caption_image(*backend, img, e, s.id, path).text;
      }
      save_manifest(manifest, manifest_path);
      rec.record().add_output(manifest_path);
      rec.finish(dir);
    } else if (enhance->parsed()) {
      Recorder rec("enhance", cfg);
      rec.record().add_input(manifest_path);
      auto manifest = load_manifest(manifest_path);
      const std::string name = backend_name.empty() ? cfg.backend_name("llm") : backend_name;
      const auto backend = make_llm(cfg, name);
      const int retries = cfg.backends.count(name) ? cfg.backends.at(name).retries : 2;
      for (auto& s : manifest.samples) {
        if (!s.caption) throw ValidationError("sample " + s.id + " has no caption; run caption first");
        const auto prompt = text::build_prompt(text::make_caption(*s.caption, s.emotion, text::CaptionSource::Captioner));
        const auto raw = text::enhance_description(*backend, prompt, retries);
        try {
          s.enhanced_description = text::parse_llm_response(raw, &prompt).text;
        } catch (const ValidationError& e) {
          spdlog::warn("sample {}: {}; using the caption instead", s.id, e.what());
          s.enhanced_description = *s.caption;
        }
      }
      save_manifest(manifest, manifest_path);
      rec.record().add_output(manifest_path);
      rec.finish(parent_or_cwd(manifest_path));
    } else if (precompute->parsed()) {
      Recorder rec("precompute", cfg);
      const auto manifest = load_manifest(manifest_path);
      const auto variant = text::parse_variant(variant_name);
      const auto cache = cache_dir.empty() ? cfg.paths.cache : cache_dir;
      const auto codec = make_codec(cfg);
      const auto encoder = make_text_encoder(cfg);
      const auto r = gen::precompute_tensors(manifest, parent_or_cwd(manifest_path), variant, *codec, *encoder, cache,
                                             g.threads);
      rec.record().add_input(manifest_path);
      rec.record().add_output(cache);
      rec.finish(cache);
      out << json{{"index", r.index_path.string()},
                  {"entries", r.entries},
                  {"audio_written", r.audio_written},
                  {"text_written", r.text_written},
                  {"index_written", r.index_written}}
                 .dump()
          << "\n";
    } else if (finetune->parsed()) {
      Recorder rec("finetune", cfg);
      const auto manifest = load_manifest(manifest_path);
      const auto variant = text::parse_variant(variant_name);
      auto tcfg = cfg.training;
      training_overrides(tcfg);
      auto policy = cfg.freeze_policy ? *cfg.freeze_policy : gen::FreezePolicy::for_variant(variant);
      if (freeze_frac) policy.frozen_transformer_fraction = *freeze_frac;
      const auto codec = make_codec(cfg);
      const auto encoder = make_text_encoder(cfg);
      std::optional<fs::path> cache;
      if (!cache_dir.empty()) cache = cache_dir;
      auto set = gen::load_training_set(manifest, parent_or_cwd(manifest_path), variant, *codec, *encoder, cache);
      gen::MusicCheckpoint ck;
      auto model_cfg = cfg.music_model;
      model_cfg.codebooks = codec->codebooks();
      model_cfg.codebook_size = codec->codebook_size();
      model_cfg.text_dim = encoder->dim();
      ck.model = std::make_unique<gen::ToyMusicLm>(model_cfg);
      ck.variant = variant;
      ck.codec_id = codec->id();
      ck.text_encoder_id = encoder->id();
      ck.training = tcfg;
      ck.policy = policy;
      gen::FinetuneHistory history;
      rec.record().add_input(manifest_path);
      if (cache) rec.record().add_input(*cache);
      try {
        history = gen::finetune(*ck.model, std::move(set.train), std::move(set.eval), tcfg, policy);
      } catch (const gen::TrainingAborted& e) {
        save_music_checkpoint(ck, ckpt_path);
        rec.record().add_output(ckpt_path);
        rec.record().add_output(ckpt_path.string() + ".json");
        rec.finish(parent_or_cwd(ckpt_path));
        throw;
      }
      save_music_checkpoint(ck, ckpt_path);
      rec.record().add_output(ckpt_path);
      rec.record().add_output(ckpt_path.string() + ".json");
      rec.finish(parent_or_cwd(ckpt_path));
      json epochs_json = json::array();
      for (const auto& e : history.epochs) {
        epochs_json.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"eval_loss", e.eval_loss}});
      }
      out << json{{"checkpoint", ckpt_path.string()},
                  {"best_epoch", history.best_epoch},
                  {"eval_fell_back_to_train", history.eval_fell_back_to_train},
                  {"history", epochs_json}}
                 .dump()
          << "\n";
    } else if (generate->parsed()) {
      if (text_arg.empty() && image_path.empty()) {
        err << "generate needs --text or --image\n" << generate->help();
        return kExitUsage;
      }
      Recorder rec("generate", cfg);
      if (top_k) cfg.sampling.top_k = *top_k;
      if (temperature) cfg.sampling.temperature = *temperature;
      if (seconds) cfg.sampling.max_seconds = *seconds;
      cfg.sampling.validate();
      rec.record().add_input(ckpt_path);
      if (!image_path.empty()) {
        const auto ck = gen::load_music_checkpoint(ckpt_path);
        cfg.variant = ck.variant;
        RunOptions opts;
        opts.image = image_path;
        opts.music_checkpoint = ckpt_path;
        opts.classifier_checkpoint = emotion_ckpt;
        opts.wav = out_path;
        const auto r = run_end_to_end(opts, cfg);
        rec.record().add_input(image_path);
        rec.record().add_output(r.wav);
        rec.record().add_output(r.provenance);
        out << r.wav.string() << "\n" << r.provenance.string() << "\n";
      } else {
        const auto ck = gen::load_music_checkpoint(ckpt_path);
        const auto codec = make_codec(cfg);
        const auto encoder = make_text_encoder(cfg);
        const auto w = gen::generate(ck, *codec, *encoder, text_arg, cfg.sampling);
        if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
        gen::write_file_atomic(out_path, audio::encode_wav16(w));
        rec.record().add_output(out_path);
        out << out_path.string() << "\n";
      }
      rec.finish(parent_or_cwd(out_path));
    } else if (evaluate->parsed()) {
      Recorder rec("evaluate", cfg);
      const auto manifest = load_manifest(manifest_path);
      const auto embedder = make_embedder(cfg, embedder_name);
      const auto classifier = make_audio_classifier(cfg, classifier_name);
      const auto clap = make_clap(cfg, clap_name);
      metrics::EvaluateOptions opts;
      if (split_name == "all") {
        opts.split.reset();
      } else {
        opts.split = parse_split(split_name);
      }
      opts.model = model_label;
      opts.clap_text_template = clap_template;
      opts.threads = g.threads;
      const auto report = metrics::evaluate_suite(manifest, parent_or_cwd(manifest_path), generated_dir,
                                                  {*embedder, *classifier, *clap}, opts);
      write_text(out_path, metrics::report_to_json(report));
      const auto table = metrics::render_table(metrics::report_rows(report));
      const fs::path table_out = table_path.empty() ? fs::path(out_path.string() + ".md") : table_path;
      write_text(table_out, table);
      rec.record().add_input(manifest_path);
      rec.record().add_input(generated_dir);
      rec.record().add_output(out_path);
      rec.record().add_output(table_out);
      rec.finish(parent_or_cwd(out_path));
      out << table;
    } else if (run->parsed()) {
      if (!run_variant.empty()) {
        cfg.variant = text::parse_variant(run_variant);
      } else {
        // An unreadable checkpoint is left for the pipeline to report under its own stage.
        try {
          cfg.variant = gen::load_music_checkpoint(ckpt_path).variant;
        } catch (const Error&) {
        }
      }
      Recorder rec("run", cfg);
      RunOptions opts;
      opts.image = image_path;
      opts.music_checkpoint = ckpt_path;
      opts.classifier_checkpoint = emotion_ckpt;
      opts.out_dir = out_dir;
      const auto r = run_end_to_end(opts, cfg);
      rec.record().add_input(image_path);
      rec.record().add_input(ckpt_path);
      rec.record().add_output(r.wav);
      rec.record().add_output(r.provenance);
      rec.finish(r.wav.parent_path());
      out << r.wav.string() << "\n" << r.provenance.string() << "\n";
    }
  } catch (const StageError& e) {
    err << "error [" << e.stage() << "]: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace p2m::pipeline
