#include "p2m/pipeline/pipeline.hpp"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "p2m/audio/wav.hpp"
#include "p2m/core/hash.hpp"
#include "p2m/generation/tokens.hpp"

namespace p2m::pipeline {

using nlohmann::json;

namespace {

template <typename Fn>
auto stage(const std::string& name, const std::filesystem::path& image, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, "stage " + name + " failed for " + image.string() + ": " + e.what());
  }
}

json distribution_json(const emotion::EmotionPrediction& p) {
  json d = json::object();
  for (Emotion e : kAllEmotions) d[std::string(to_string(e))] = p.distribution[index_of(e)];
  return d;
}

}  // namespace

RunResult run_end_to_end(const RunOptions& opts, const PipelineConfig& cfg) {
  const auto variant = cfg.variant;
  const auto out_dir = opts.out_dir.empty() ? cfg.paths.output : opts.out_dir;
  const auto cls_path =
      opts.classifier_checkpoint.empty() ? cfg.paths.checkpoints / "emotion.ckpt" : opts.classifier_checkpoint;
  const std::string base = opts.image.stem().string() + "." + std::string(text::to_string(variant));
  RunResult result;
  result.wav = opts.wav.empty() ? out_dir / (base + ".wav") : opts.wav;
  result.provenance = result.wav.parent_path() / (result.wav.stem().string() + ".provenance.json");

  json prov;
  prov["image"] = opts.image.filename().string();
  prov["variant"] = std::string(text::to_string(variant));
  prov["seeds"] = {{"config", cfg.seed}, {"sampling", cfg.sampling.seed}};
  prov["config_hash"] = cfg.hash();
  prov["tool_version"] = P2M_VERSION;

  try {
    const Image image = stage("load-image", opts.image, [&] { return load_image(opts.image); });
    prov["image_sha256"] = pixel_hash(image);

    auto classifier = stage("predict-emotion", opts.image, [&] { return emotion::load_classifier(cls_path); });
    const auto prediction =
        stage("predict-emotion", opts.image, [&] { return emotion::predict_emotion(*classifier, image); });
    prov["emotion"] = std::string(to_string(prediction.label));
    prov["distribution"] = distribution_json(prediction);

    text::SampleTexts texts;
    texts.emotion = prediction.label;
    json backends = {{"classifier", classifier->backbone().id()}};

    if (variant != text::Variant::Emotive) {
      auto captioner = make_captioner(cfg, cfg.backend_name("captioner"));
      backends["captioner"] = captioner->id();
      const auto caption = stage("caption", opts.image, [&] {
        return text::caption_image(*captioner, image, prediction.label, opts.image.stem().string(), opts.image);
      });
      texts.caption = caption.text;
      prov["caption"] = caption.text;
      prov["conditioning_prefix"] = text::conditioning_prefix(prediction.label);
    }
    if (variant == text::Variant::Lyrical || variant == text::Variant::Optimized) {
      auto llm = make_llm(cfg, cfg.backend_name("llm"));
      backends["llm"] = llm->id();
      const auto prompt = stage("build-prompt", opts.image, [&] {
        return text::build_prompt(text::make_caption(*texts.caption, prediction.label, text::CaptionSource::Captioner));
      });
      const int retries = cfg.backend_for("llm").retries;
      const auto raw = stage("enhance", opts.image, [&] { return text::enhance_description(*llm, prompt, retries); });
      prov["prompt"] = {{"system_message", prompt.system_message}, {"instruction", prompt.instruction}};
      prov["llm_response"] = raw;
      try {
        const auto parsed = text::parse_llm_response(raw, &prompt);
        texts.enhanced_description = parsed.text;
        prov["enhanced_description"] = parsed.text;
        prov["mood_terms_present"] = parsed.mood_terms_present;
      } catch (const ValidationError& e) {
        spdlog::warn("unusable LLM completion for {} ({}); falling back to the caption", opts.image.string(), e.what());
        texts.enhanced_description = texts.caption;
        prov["enhanced_description"] = *texts.caption;
        prov["enhanced_description_fallback"] = true;
      }
    }
    const std::string condition = stage("select-text", opts.image, [&] { return text::text_for_variant(variant, texts); });
    prov["text"] = condition;

    const auto wav = stage("generate", opts.image, [&] {
      const auto ckpt = gen::load_music_checkpoint(opts.music_checkpoint);
      if (ckpt.variant != variant) {
        spdlog::warn("checkpoint was trained for variant {} but the config selects {}", text::to_string(ckpt.variant),
                     text::to_string(variant));
      }
      auto codec = make_codec(cfg);
      auto encoder = make_text_encoder(cfg);
      backends["codec"] = codec->id();
      backends["text_encoder"] = encoder->id();
      backends["music_model"] = ckpt.model->id();
      prov["checkpoint"] = {{"content_hash", ckpt.content_hash}, {"variant", std::string(text::to_string(ckpt.variant))}};
      return gen::generate(ckpt, *codec, *encoder, condition, cfg.sampling);
    });
    prov["backends"] = backends;
    prov["sampling"] = {{"top_k", cfg.sampling.top_k},
                        {"temperature", cfg.sampling.temperature},
                        {"max_seconds", cfg.sampling.max_seconds},
                        {"seed", cfg.sampling.seed}};

    stage("write", opts.image, [&] {
      if (result.wav.has_parent_path()) std::filesystem::create_directories(result.wav.parent_path());
      const auto bytes = audio::encode_wav16(wav);
      gen::write_file_atomic(result.wav, bytes);
      prov["wav_sha256"] = sha256_hex(std::as_bytes(std::span<const std::uint8_t>(bytes)));
      result.provenance_json = prov.dump(2) + "\n";
      gen::write_file_atomic(result.provenance,
                             std::vector<std::uint8_t>(result.provenance_json.begin(), result.provenance_json.end()));
      return 0;
    });
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(result.wav, ec);
    std::filesystem::remove(result.provenance, ec);
    throw;
  }
  return result;
}

}  // namespace p2m::pipeline
