// Acceptance checks. Prints one PASS/FAIL line per criterion.
//   p2m_acceptance            run every criterion
//   p2m_acceptance 4 7        run criteria 4 and 7
// Exit status is non-zero when any selected criterion fails.

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "p2m/core/hash.hpp"
#include "p2m/core/manifest.hpp"
#include "p2m/core/rng.hpp"
#include "p2m/core/split.hpp"
#include "p2m/dataset/chunk.hpp"
#include "p2m/emotion/classifier.hpp"
#include "p2m/generation/codec.hpp"
#include "p2m/generation/harness.hpp"
#include "p2m/generation/music_lm.hpp"
#include "p2m/generation/sampling.hpp"
#include "p2m/metrics/backends.hpp"
#include "p2m/metrics/evaluate.hpp"
#include "p2m/metrics/metrics.hpp"
#include "p2m/nn/autodiff.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace p2m;
using p2m::testing::TempDir;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back(std::string(ok ? "ok " : "FAILED ") + what);
  }
};

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Inverse standard normal CDF by Newton on erfc.
double probit(double p) {
  double x = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double cdf = 0.5 * std::erfc(-x / std::numbers::sqrt2);
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    const double step = (cdf - p) / pdf;
    x -= step;
    if (std::abs(step) < 1e-14) break;
  }
  return x;
}

metrics::EmbeddingSet quantile_set(double mu, double sigma, int n) {
  metrics::EmbeddingSet s;
  s.vectors.resize(n, 1);
  for (int i = 0; i < n; ++i) s.vectors(i, 0) = mu + sigma * probit((i + 0.5) / n);
  return s;
}

Waveform band_limited_square(double f0, int rate, double seconds) {
  const auto n = static_cast<std::size_t>(seconds * rate);
  std::vector<double> x(n, 0.0);
  for (int k = 1; k * f0 < rate / 2.0; k += 2) {
    const double w = 2.0 * std::numbers::pi * k * f0 / rate;
    for (std::size_t i = 0; i < n; ++i) x[i] += (4.0 / std::numbers::pi) * std::sin(w * i) / k * 0.5;
  }
  return Waveform(std::move(x), rate);
}

// ---------------------------------------------------------------- 1
Outcome metric_oracles() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  Rng rng(11);

  metrics::EmbeddingSet a;
  a.vectors.resize(200, 8);
  for (Eigen::Index i = 0; i < a.vectors.size(); ++i) a.vectors.data()[i] = rng.normal();
  const double self = metrics::fad(a, a);
  o.check(std::abs(self) <= 1e-6, "fad(a,a) = " + fmt(self));

  const double mu1 = 0.0, s1 = 1.0, mu2 = 1.5, s2 = 2.0;
  const double closed = (mu1 - mu2) * (mu1 - mu2) + (s1 - s2) * (s1 - s2);
  const double one_d = metrics::fad(quantile_set(mu1, s1, 4000), quantile_set(mu2, s2, 4000));
  o.check(std::abs(one_d - closed) <= 0.05, "1-D fad " + fmt(one_d) + " vs closed form " + fmt(closed));

  const double square = metrics::thd(band_limited_square(440.0, 32000, 2.0), metrics::ThdParams{});
  o.check(std::abs(square - 0.477) <= 0.01, "square-wave thd (10 harmonics) = " + fmt(square) + ", target 0.477 +-0.01");

  metrics::PosteriorSet onehot;
  onehot.rows = nn::Matrix::Identity(5, 5);
  const double isc = metrics::inception_score(onehot);
  o.check(std::abs(isc - 5.0) <= 1e-6, "isc(one-hot x5) = " + fmt(isc, 12));

  Eigen::VectorXd p(2), q(2);
  p << 0.5, 0.5;
  q << 0.25, 0.75;
  const double k = metrics::kl(p, q);
  const double k_oracle = 0.5 * std::log(0.5 / 0.25) + 0.5 * std::log(0.5 / 0.75);
  o.check(std::abs(k - 0.1438) <= 1e-4 && std::abs(k - k_oracle) <= 1e-12, "kl = " + fmt(k, 8));

  bool bounds = true, invariant = true;
  for (int i = 0; i < 1000; ++i) {
    const int d = 1 + static_cast<int>(rng.below(32));
    Eigen::VectorXd t(d), u(d);
    for (int j = 0; j < d; ++j) {
      t[j] = rng.normal();
      u[j] = rng.normal();
    }
    const double c = metrics::clap_score({{t, u}});
    bounds = bounds && c >= -1.0 - 1e-12 && c <= 1.0 + 1e-12;
    const double a1 = 1e-3 + 100.0 * rng.uniform(), a2 = 1e-3 + 100.0 * rng.uniform();
    const double scaled = metrics::clap_score({{a1 * t, a2 * u}});
    invariant = invariant && std::abs(scaled - c) <= 1e-9;
  }
  o.check(bounds, "clap_score within [-1, 1] on 1000 random pairs");
  o.check(invariant, "clap_score unchanged by positive rescaling on 1000 random pairs");

  const double t = elapsed(start);
  o.check(t < 10.0, "runtime " + fmt(t, 3) + " s < 10 s");
  return o;
}

// ---------------------------------------------------------------- 2
Outcome curation_determinism() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  TempDir tmp("p2m-acc2");
  const auto fx = p2m::testing::fixture_dir();
  for (const char* run : {"a", "b"}) {
    const auto r = p2m::testing::run_cli({"--seed", "7", "--log-level", "error", "curate", "--paintings",
                                          (fx / "paintings").string(), "--midi", (fx / "midi").string(), "--out",
                                          (tmp.path() / run / "data").string()});
    o.check(r.code == 0, std::string("curate run ") + run + " exit " + std::to_string(r.code) + " " + r.err);
  }
  const auto ma = p2m::testing::read_text(tmp / "a/data/manifest.json");
  const auto mb = p2m::testing::read_text(tmp / "b/data/manifest.json");
  o.check(ma == mb, "manifests byte-identical");
  const auto m = parse_manifest(ma);
  o.check(m.samples.size() == 10, "manifest has " + std::to_string(m.samples.size()) + " samples");
  bool wavs = true;
  for (const auto& s : m.samples) {
    wavs = wavs && sha256_file(tmp / "a/data" / s.audio_path) == sha256_file(tmp / "b/data" / s.audio_path);
  }
  o.check(wavs, "referenced wavs byte-identical");

  Rng rng(2024);
  int bad = 0;
  for (int c = 0; c < 500; ++c) {
    const int rate = 1000 + static_cast<int>(rng.below(31001));
    const double chunk_seconds = 1.0 + static_cast<double>(rng.below(30));
    const auto n = static_cast<std::size_t>(rng.uniform() * 120.0 * rate);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i % 9973) / 9973.0;
    const Waveform w(std::move(x), rate);
    const auto chunks = dataset::chunk_audio(w, chunk_seconds);
    const auto len = static_cast<std::size_t>(std::llround(chunk_seconds * rate));
    bool ok = chunks.size() == n / len;
    std::size_t pos = 0;
    for (const auto& ch : chunks) {
      ok = ok && ch.size() == len && ch.sample_rate() == rate;
      for (std::size_t i = 0; ok && i < ch.size(); ++i) ok = ch[i] == w[pos + i];
      pos += ch.size();
    }
    ok = ok && n - pos < len;
    if (!ok) ++bad;
  }
  o.check(bad == 0, "chunker property: " + std::to_string(bad) + " of 500 cases with overlap, gap or partial chunk");
  const double t = elapsed(start);
  o.check(t < 30.0, "runtime " + fmt(t, 3) + " s < 30 s");
  return o;
}

// ---------------------------------------------------------------- 3
Outcome split_stratification() {
  Outcome o;
  Rng rng(303);
  const SplitRatios ratios;
  double worst = 0.0;
  int order_mismatch = 0;
  for (int c = 0; c < 100; ++c) {
    std::vector<PairedSample> samples;
    std::map<Emotion, std::size_t> sizes;
    for (Emotion e : kAllEmotions) {
      const auto n = static_cast<std::size_t>(rng.below(61));
      sizes[e] = n;
      for (std::size_t i = 0; i < n; ++i) {
        PairedSample s;
        s.id = std::string(to_string(e)) + "-" + std::to_string(rng.next() % 1000000) + "-" + std::to_string(i);
        s.image_path = s.id + ".png";
        s.audio_path = s.id + ".wav";
        s.emotion = e;
        samples.push_back(s);
      }
    }
    const auto seed = static_cast<std::int64_t>(rng.below(1u << 30));
    const auto split = split_dataset(samples, ratios, seed);
    for (Emotion e : kAllEmotions) {
      std::map<Split, double> got;
      for (const auto& s : split) {
        if (s.emotion == e) got[s.split] += 1.0;
      }
      const double n = static_cast<double>(sizes[e]);
      worst = std::max({worst, std::abs(got[Split::Train] - 0.8 * n), std::abs(got[Split::Eval] - 0.1 * n),
                        std::abs(got[Split::Test] - 0.1 * n)});
    }
    auto shuffled = samples;
    rng.shuffle(shuffled);
    const auto split2 = split_dataset(shuffled, ratios, seed);
    std::map<std::string, Split> first;
    for (const auto& s : split) first[s.id] = s.split;
    for (const auto& s : split2) {
      if (first.at(s.id) != s.split) {
        ++order_mismatch;
        break;
      }
    }
  }
  o.check(worst < 1.0, "largest per-emotion deviation from 0.8/0.1/0.1 targets: " + fmt(worst) + " samples");
  o.check(order_mismatch == 0, "assignment independent of input order in " + std::to_string(100 - order_mismatch) +
                                   " of 100 cases");
  return o;
}

// ---------------------------------------------------------------- 4
Outcome classifier_checks() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();

  {
    emotion::ClassifierConfig cfg;
    cfg.grid = 2;
    cfg.channels = 6;
    cfg.gru_hidden = 3;
    cfg.attention_heads = 2;
    cfg.head_init_std = 0.3;
    cfg.init_seed = 5;
    emotion::ClassifierModel model(cfg);
    const auto images = p2m::testing::separable_images(1, 9, 16);
    const nn::Matrix feats = model.features(images[2].image);
    const std::vector<int> target = {static_cast<int>(index_of(images[2].label))};
    auto loss_value = [&] { return nn::cross_entropy(model.logits_from_features(feats), target).scalar(); };
    model.parameters().zero_grad();
    nn::backward(nn::cross_entropy(model.logits_from_features(feats), target));
    double worst = 0.0;
    std::size_t checked = 0;
    for (const auto& name : model.head_parameter_names()) {
      auto& var = model.parameters().at(name);
      const nn::Matrix analytic = var.grad();
      nn::Matrix numeric(var.rows(), var.cols());
      for (Eigen::Index i = 0; i < var.value().size(); ++i) {
        const double keep = var.value().data()[i];
        const double h = 1e-5;
        var.mutable_value().data()[i] = keep + h;
        const double up = loss_value();
        var.mutable_value().data()[i] = keep - h;
        const double down = loss_value();
        var.mutable_value().data()[i] = keep;
        numeric.data()[i] = (up - down) / (2.0 * h);
        ++checked;
      }
      const double denom = std::max(analytic.norm(), numeric.norm());
      if (denom > 1e-10) worst = std::max(worst, (analytic - numeric).norm() / denom);
    }
    o.check(worst < 1e-4, "head gradient vs central differences over " + std::to_string(checked) +
                              " scalars: worst relative error " + fmt(worst, 3));
  }

  emotion::ClassifierModel model(emotion::ClassifierConfig{});
  const auto backbone_names = model.backbone().parameter_names();
  const auto before = model.parameters().hash(backbone_names);
  const auto head_before = model.parameters().hash(model.head_parameter_names());
  auto train = p2m::testing::separable_images(10, 42);
  emotion::ClassifierTrainConfig tcfg;  // batch 16, 40 epochs, lr 1e-5, warmup 100, AdamW, cosine
  const auto history = emotion::train_classifier(model, train, {}, tcfg);
  o.check(model.parameters().hash(backbone_names) == before, "frozen backbone hash unchanged by training");
  o.check(model.parameters().hash(model.head_parameter_names()) != head_before, "head parameters did train");
  const auto [loss, accuracy] = emotion::evaluate_classifier(model, train);
  o.check(accuracy >= 0.9, "separable fixture (50 images) train accuracy " + fmt(accuracy, 4) + " after " +
                               std::to_string(history.epochs.size()) + " epochs (loss " + fmt(loss, 4) + ")");
  const double t = elapsed(start);
  o.check(t < 120.0, "runtime " + fmt(t, 3) + " s < 120 s");
  return o;
}

// ---------------------------------------------------------------- 5
std::vector<double> truncated_softmax(const std::vector<double>& logits, int k, double temperature) {
  std::vector<int> order(logits.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return logits[a] > logits[b]; });
  std::vector<double> p(logits.size(), 0.0);
  double z = 0.0;
  for (int i = 0; i < k; ++i) z += std::exp(logits[order[i]] / temperature);
  for (int i = 0; i < k; ++i) p[order[i]] = std::exp(logits[order[i]] / temperature) / z;
  return p;
}

Outcome sampling_correctness() {
  Outcome o;
  const std::vector<double> logits = {1.2, -0.3, 2.0, 0.7, 0.1, -1.5, 1.9, 0.0};
  const int vocab = static_cast<int>(logits.size());
  for (int k : {1, 2, vocab}) {
    Rng rng(derive_seed(55, static_cast<std::uint64_t>(k)));
    std::vector<double> freq(logits.size(), 0.0);
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) freq[gen::sample_topk(logits, k, 1.0, rng)] += 1.0 / draws;
    const auto exact = truncated_softmax(logits, k, 1.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) worst = std::max(worst, std::abs(freq[i] - exact[i]));
    o.check(worst <= 0.01, "k=" + std::to_string(k) + ": max |empirical - exact| = " + fmt(worst, 3));
  }
  Rng rng(77);
  bool argmax_ok = true;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> l(16);
    for (auto& v : l) v = 3.0 * rng.normal();
    const int best = static_cast<int>(std::max_element(l.begin(), l.end()) - l.begin());
    for (double temp : {0.1, 1.0, 10.0}) argmax_ok = argmax_ok && gen::sample_topk(l, 1, temp, rng) == best;
  }
  o.check(argmax_ok, "k=1 returns the argmax at temperatures 0.1, 1 and 10 (200 random logit vectors)");
  return o;
}

// Shared toy workspace for criteria 6 and 7.
const p2m::testing::ToyWorkspace& workspace() {
  static TempDir dir("p2m-acc-ws");
  static const auto ws = p2m::testing::build_workspace(dir.path(), 7);
  return ws;
}

// ---------------------------------------------------------------- 6
Outcome harness_sanity() {
  Outcome o;
  const auto& ws = workspace();
  const auto manifest = load_manifest(ws.manifest);
  gen::ToyCodec codec;
  gen::ToyTextEncoder encoder;
  auto set = gen::load_training_set(manifest, ws.manifest.parent_path(), text::Variant::Lyrical, codec, encoder,
                                    std::nullopt);
  o.check(set.train.size() + set.eval.size() == 10,
          "fixture gives " + std::to_string(set.train.size() + set.eval.size()) + " training examples");

  gen::ToyMusicLmConfig mcfg;
  mcfg.init_seed = 7;
  gen::ToyMusicLm fresh(mcfg);
  const double initial = gen::mean_loss(fresh, set.train);
  const double ln_v = std::log(static_cast<double>(codec.codebook_size()));
  o.check(std::abs(initial - ln_v) <= 0.02 * ln_v,
          "initial loss " + fmt(initial, 5) + " vs ln(" + std::to_string(codec.codebook_size()) + ") = " + fmt(ln_v, 5));

  gen::TrainingConfig tcfg;
  tcfg.batch_size = p2m::testing::kQuickBatch;
  tcfg.learning_rate = p2m::testing::kQuickLr;
  tcfg.warmup_steps = p2m::testing::kQuickWarmup;
  tcfg.epochs = 5;
  tcfg.seed = 7;
  gen::ToyMusicLm model(mcfg);
  const auto history = gen::finetune(model, set.train, set.eval, tcfg, gen::FreezePolicy{true, 0.0});
  const double first = history.epochs.front().eval_loss;
  o.check(history.best_eval_loss < first, "eval loss " + fmt(first, 5) + " (epoch 1) -> " +
                                              fmt(history.best_eval_loss, 5) + " (best, epoch " +
                                              std::to_string(history.best_epoch) + ")" +
                                              (history.eval_fell_back_to_train ? ", train loss stands in for the empty eval split" : ""));
  double best_so_far = std::numeric_limits<double>::infinity();
  bool monotone = true;
  for (const auto& e : history.epochs) {
    monotone = monotone && std::min(best_so_far, e.eval_loss) <= best_so_far;
    best_so_far = std::min(best_so_far, e.eval_loss);
  }
  o.check(monotone && history.epochs.size() == 5, "5 epochs run with non-increasing best-so-far eval loss");

  gen::ToyMusicLm frozen(mcfg);
  std::map<std::string, std::string> hashes;
  const auto heads = frozen.head_parameter_names();
  for (const auto& n : frozen.parameters().names()) hashes[n] = frozen.parameters().hash({n});
  gen::finetune(frozen, set.train, set.eval, tcfg, gen::FreezePolicy{true, 1.0});
  int changed_non_head = 0, changed_head = 0;
  for (const auto& n : frozen.parameters().names()) {
    const bool changed = frozen.parameters().hash({n}) != hashes[n];
    const bool is_head = std::find(heads.begin(), heads.end(), n) != heads.end();
    if (changed && !is_head) ++changed_non_head;
    if (changed && is_head) ++changed_head;
  }
  o.check(changed_non_head == 0, "FreezePolicy(1.0): " + std::to_string(changed_non_head) +
                                     " non-head parameter hashes changed");
  o.check(changed_head > 0, "FreezePolicy(1.0): head parameters still train");
  return o;
}

// ---------------------------------------------------------------- 7
Outcome end_to_end_determinism() {
  Outcome o;
  const auto& ws = workspace();
  const auto painting = p2m::testing::fixture_dir() / "paintings" / "sad_01.png";
  for (auto v : {text::Variant::Emotive, text::Variant::Narrative, text::Variant::Lyrical, text::Variant::Optimized}) {
    const std::string name(text::to_string(v));
    const auto ckpt = p2m::testing::finetune_variant(ws, v, 2, 7);
    std::vector<std::string> wav_sha, prov;
    for (const char* run : {"run1", "run2"}) {
      const auto out = ws.root / "e2e" / run;
      const auto r = p2m::testing::run_cli({"--seed", "7", "--log-level", "error", "run", "--image", painting.string(),
                                            "--ckpt", ckpt.string(), "--emotion-ckpt", ws.emotion_ckpt.string(),
                                            "--out", out.string()});
      if (r.code != 0) {
        o.check(false, name + " " + run + " exit " + std::to_string(r.code) + ": " + r.err);
        return o;
      }
      wav_sha.push_back(sha256_file(out / ("sad_01." + name + ".wav")));
      prov.push_back(p2m::testing::read_text(out / ("sad_01." + name + ".provenance.json")));
    }
    o.check(wav_sha[0] == wav_sha[1] && prov[0] == prov[1], name + ": wav and provenance byte-identical across runs");
    const auto p = json::parse(prov[0]);
    if (v == text::Variant::Emotive) {
      const std::string expected = p.at("emotion").get<std::string>() + " song";
      o.check(p.at("text") == expected, "emotive provenance text is \"" + p.at("text").get<std::string>() +
                                            "\", expected \"" + expected + "\"");
    }
  }
  return o;
}

// ---------------------------------------------------------------- 8
Outcome evaluation_self_consistency() {
  Outcome o;
  TempDir tmp("p2m-acc8");
  const auto fx = p2m::testing::fixture_dir();
  const auto r = p2m::testing::run_cli({"--seed", "3", "--log-level", "error", "curate", "--paintings",
                                        (fx / "paintings").string(), "--midi", (fx / "midi").string(), "--out",
                                        (tmp / "data").string()});
  o.check(r.code == 0, "curate exit " + std::to_string(r.code));
  const auto manifest = load_manifest(tmp / "data/manifest.json");
  fs::create_directories(tmp / "same");
  fs::create_directories(tmp / "shuffled");
  const auto& s = manifest.samples;
  for (std::size_t i = 0; i < s.size(); ++i) {
    fs::copy_file(tmp / "data" / s[i].audio_path, tmp / "same" / (s[i].id + ".wav"));
    // Pair each id with the clip two emotions further along (samples are sorted by id, 2 per emotion).
    const auto& other = s[(i + 4) % s.size()];
    fs::copy_file(tmp / "data" / other.audio_path, tmp / "shuffled" / (s[i].id + ".wav"));
  }
  metrics::ToyEmbedder embedder;
  metrics::ToyAudioClassifier classifier;
  metrics::ToyClap clap;
  metrics::EvaluateOptions opts;
  opts.split.reset();
  const auto same = metrics::evaluate_suite(manifest, tmp / "data", tmp / "same", {embedder, classifier, clap}, opts);
  const auto shuf =
      metrics::evaluate_suite(manifest, tmp / "data", tmp / "shuffled", {embedder, classifier, clap}, opts);
  o.check(same.scores.fad < 1e-3, "generated = reference: FAD " + fmt(same.scores.fad, 3));
  o.check(same.scores.kl < 1e-6, "generated = reference: KL " + fmt(same.scores.kl, 3));
  o.check(shuf.scores.kl > same.scores.kl, "shuffled pairing KL " + fmt(shuf.scores.kl, 4) + " > " +
                                               fmt(same.scores.kl, 4));
  const auto table = metrics::render_table(metrics::report_rows(same));
  const auto header = table.substr(0, table.find('\n'));
  o.check(header == "| Model | FAD↓ | CLAP↑ | KL↓ | THD↓ | ISc↑ |", "table header " + header);
  return o;
}

// ---------------------------------------------------------------- 9
std::vector<std::string> cells(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  std::getline(ss, cell, '|');
  while (std::getline(ss, cell, '|')) {
    const auto b = cell.find_first_not_of(' ');
    const auto e = cell.find_last_not_of(' ');
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return out;
}

Outcome table_rendering() {
  Outcome o;
  const auto rows = metrics::load_score_rows(p2m::testing::fixture_dir() / "published_scores.json");
  const auto table = metrics::render_table(rows);
  std::vector<std::vector<std::string>> grid;
  std::stringstream ss(table);
  for (std::string line; std::getline(ss, line);) grid.push_back(cells(line));
  o.check(grid.size() == 2 + rows.size(), "table has header, rule and " + std::to_string(rows.size()) + " rows");
  const std::vector<std::string> header = {"Model", "FAD↓", "CLAP↑", "KL↓", "THD↓", "ISc↑"};
  o.check(grid[0] == header, "column order and arrows");
  const std::vector<std::pair<std::string, std::string>> expected = {{"MG-S Lyrical", "5.06"},
                                                                    {"MG-S Optimized", "0.13"},
                                                                    {"MG-S Optimized", "0.012"},
                                                                    {"MG-S Narrative", "1.73"},
                                                                    {"MG-S Emotive", "1.044"}};
  for (std::size_t c = 0; c < expected.size(); ++c) {
    std::vector<std::string> winners;
    std::string cell;
    for (std::size_t r = 2; r < grid.size(); ++r) {
      const auto& v = grid[r][c + 1];
      if (v.size() > 4 && v.starts_with("**") && v.ends_with("**")) {
        winners.push_back(grid[r][0]);
        cell = v.substr(2, v.size() - 4);
      }
    }
    const bool ok = winners.size() == 1 && winners[0] == expected[c].first && cell == expected[c].second;
    o.check(ok, header[c + 1] + " bold: " + (winners.empty() ? std::string("none") : winners[0] + " " + cell));
  }
  std::printf("%s", table.c_str());
  return o;
}

struct Criterion {
  int number;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::err);
  const std::vector<Criterion> all = {
      {1, "metric oracle suite", metric_oracles},
      {2, "curation determinism", curation_determinism},
      {3, "split stratification", split_stratification},
      {4, "classifier checks", classifier_checks},
      {5, "sampling correctness", sampling_correctness},
      {6, "harness training sanity", harness_sanity},
      {7, "end-to-end determinism", end_to_end_determinism},
      {8, "evaluation self-consistency", evaluation_self_consistency},
      {9, "reference table rendering", table_rendering},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& c : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.number) == selected.end()) continue;
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.check(false, std::string("exception: ") + e.what());
    }
    for (const auto& n : out.notes) std::printf("    %s\n", n.c_str());
    std::printf("%s criterion %d: %s\n", out.pass ? "PASS" : "FAIL", c.number, c.title);
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
