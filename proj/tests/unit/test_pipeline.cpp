#include <doctest.h>

#include <fstream>
#include <nlohmann/json.hpp>

#include "p2m/core/error.hpp"
#include "p2m/core/hash.hpp"
#include "p2m/pipeline/config.hpp"
#include "p2m/pipeline/pipeline.hpp"
#include "p2m/pipeline/run_log.hpp"
#include "support.hpp"

using namespace p2m;
using namespace p2m::pipeline;
using nlohmann::json;
namespace fs = std::filesystem;
using p2m::testing::run_cli;

TEST_CASE("config parsing is strict and fills defaults") {
  const auto cfg = parse_config(R"({"seed": 5, "variant": "lyrical", "sampling": {"top_k": 50}})", "/base");
  CHECK(cfg.seed == 5);
  CHECK(cfg.variant == text::Variant::Lyrical);
  CHECK(cfg.sampling.top_k == 50);
  CHECK(cfg.training.batch_size == 16);
  CHECK(cfg.paths.cache == fs::path("/base/cache"));
  CHECK(cfg.backend_name("llm") == "toy");
  CHECK(cfg.effective_freeze_policy().frozen_transformer_fraction == 0.0);
  CHECK_THROWS_WITH_AS(parse_config(R"({"sampling": {"topk": 50}})", "/"), doctest::Contains("topk"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"training": {"batch_size": 0}})", "/"), ValidationError);
  CHECK_THROWS_AS(parse_config("{not json", "/"), ValidationError);
  CHECK(parse_config("{}", "/").hash() == default_config().hash());
  CHECK(parse_config(R"({"seed": 1})", "/").hash() != parse_config(R"({"seed": 2})", "/").hash());
}

TEST_CASE("config backends") {
  const auto cfg = parse_config(
      R"({"backends": {"local": {"kind": "command", "locator": "cat", "timeout_seconds": 5}},
          "roles": {"llm": "local"}})",
      "/");
  CHECK(cfg.backend_name("llm") == "local");
  CHECK(make_llm(cfg, "local")->id() == "command:cat");
  CHECK_THROWS_WITH_AS(make_llm(cfg, "absent"), doctest::Contains("absent"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"roles": {"llm": "absent"}})", "/"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"backends": {"x": {"kind": "grpc"}}})", "/"), ValidationError);
}

TEST_CASE("cli exit codes") {
  CHECK(run_cli({"--help"}).code == 0);
  CHECK(run_cli({}).code == 1);
  const auto unknown = run_cli({"frobnicate"});
  CHECK(unknown.code == 1);
  const auto bare = run_cli({"evaluate"});
  CHECK(bare.code == 1);
  CHECK(bare.err.find("--manifest") != std::string::npos);
  const auto missing = run_cli({"predict-emotion", "--ckpt", "/nonexistent", "--image", "/nonexistent"});
  CHECK(missing.code == 1);
  p2m::testing::TempDir tmp;
  std::ofstream(tmp / "manifest.json") << "{}";
  const auto runtime = run_cli({"--log-level", "off", "train-emotion", "--manifest", (tmp / "manifest.json").string(),
                                "--out", (tmp / "e.ckpt").string()});
  CHECK(runtime.code == 2);
  CHECK(runtime.err.rfind("error", 0) == 0);
}

TEST_CASE("run log records hashed outputs") {
  p2m::testing::TempDir tmp;
  std::ofstream(tmp / "out.txt") << "payload";
  RunRecord rec;
  rec.command = "unit";
  rec.config_hash = "abc";
  rec.started_at = utc_now();
  rec.add_output(tmp / "out.txt");
  rec.finished_at = utc_now();
  append_run_record(run_log_path(tmp.path()), rec);
  append_run_record(run_log_path(tmp.path()), rec);
  std::ifstream in(run_log_path(tmp.path()));
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    const auto j = json::parse(line);
    CHECK(j.at("command") == "unit");
    CHECK(j.at("outputs").at((tmp / "out.txt").string()) == sha256_hex(std::string_view("payload")));
    ++lines;
  }
  CHECK(lines == 2);
}

TEST_CASE("end-to-end flow on the fixture painting") {
  p2m::testing::TempDir tmp("p2m-e2e");
  const auto ws = p2m::testing::build_workspace(tmp.path(), 7);
  const auto ckpt = p2m::testing::finetune_variant(ws, text::Variant::Optimized, 1, 7);
  const auto painting = p2m::testing::fixture_dir() / "paintings" / "sad_01.png";

  const auto r = run_cli({"--seed", "7", "--log-level", "error", "run", "--image", painting.string(), "--ckpt",
                          ckpt.string(), "--emotion-ckpt", ws.emotion_ckpt.string(), "--out", (tmp / "out").string()});
  REQUIRE(r.code == 0);
  const auto prov = json::parse(p2m::testing::read_text(tmp / "out" / "sad_01.optimized.provenance.json"));
  CHECK(prov.at("emotion") == "sad");
  CHECK(prov.at("variant") == "optimized");
  CHECK(prov.at("enhanced_description") ==
        "A melancholic piano ballad in a minor key, slow tempo, with a descending melody.");
  CHECK(prov.at("text") == prov.at("enhanced_description"));
  CHECK(prov.at("seeds").at("sampling") == 7);
  CHECK(prov.at("wav_sha256") == sha256_file(tmp / "out" / "sad_01.optimized.wav"));
  CHECK(fs::exists(tmp / "out" / "runs.jsonl"));

  // The manifest carries captions and descriptions after caption + enhance.
  const auto manifest = load_manifest(ws.manifest);
  for (const auto& s : manifest.samples) {
    REQUIRE(s.caption.has_value());
    CHECK(s.caption->find(std::string(to_string(s.emotion))) != std::string::npos);
    CHECK(s.enhanced_description.has_value());
  }

  const auto gen = run_cli({"--log-level", "error", "generate", "--ckpt", ckpt.string(), "--text", "sad song",
                            "--seconds", "1", "--out", (tmp / "g" / "x.wav").string()});
  CHECK(gen.code == 0);
  CHECK(fs::file_size(tmp / "g" / "x.wav") == 44 + 2 * 32000);

  const auto bad = run_cli({"--log-level", "off", "run", "--image", painting.string(), "--ckpt", ckpt.string(),
                            "--emotion-ckpt", (tmp / "absent.ckpt").string(), "--out", (tmp / "bad").string()});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("predict-emotion") != std::string::npos);
  CHECK_FALSE(fs::exists(tmp / "bad" / "sad_01.optimized.wav"));
}

TEST_CASE("evaluate command writes report and table") {
  p2m::testing::TempDir tmp("p2m-eval");
  const auto fx = p2m::testing::fixture_dir();
  REQUIRE(run_cli({"--seed", "1", "--log-level", "error", "curate", "--paintings", (fx / "paintings").string(),
                   "--midi", (fx / "midi").string(), "--out", (tmp / "data").string()})
              .code == 0);
  const auto manifest = load_manifest(tmp / "data" / "manifest.json");
  fs::create_directories(tmp / "gen");
  for (const auto& s : manifest.samples) fs::copy_file(tmp / "data" / s.audio_path, tmp / "gen" / (s.id + ".wav"));
  const auto r = run_cli({"--log-level", "error", "evaluate", "--manifest", (tmp / "data" / "manifest.json").string(),
                          "--generated", (tmp / "gen").string(), "--embedder", "toy", "--classifier", "toy", "--split",
                          "all", "--model", "copy", "--out", (tmp / "report.json").string()});
  REQUIRE(r.code == 0);
  const auto report = json::parse(p2m::testing::read_text(tmp / "report.json"));
  CHECK(report.at("scores").at("kl").get<double>() < 1e-9);
  CHECK(p2m::testing::read_text(tmp / "report.json.md").find("| copy |") != std::string::npos);
  const auto empty = run_cli({"--log-level", "off", "evaluate", "--manifest",
                              (tmp / "data" / "manifest.json").string(), "--generated", (tmp / "gen").string(),
                              "--embedder", "toy", "--classifier", "toy", "--out", (tmp / "r2.json").string()});
  CHECK(empty.code == 2);
}
