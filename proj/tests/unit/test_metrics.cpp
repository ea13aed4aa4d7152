#include <doctest.h>

#include <cmath>
#include <numbers>

#include "p2m/audio/wav.hpp"
#include "p2m/core/error.hpp"
#include "p2m/metrics/backends.hpp"
#include "p2m/metrics/evaluate.hpp"
#include "p2m/metrics/metrics.hpp"
#include "support.hpp"

using namespace p2m;
using namespace p2m::metrics;
namespace fs = std::filesystem;

namespace {

Waveform tone(const std::vector<std::pair<int, double>>& partials, double f0, int rate, double seconds) {
  std::vector<double> x(static_cast<std::size_t>(seconds * rate), 0.0);
  for (const auto& [k, a] : partials) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += a * std::sin(2.0 * std::numbers::pi * k * f0 * i / rate);
  }
  return Waveform(std::move(x), rate);
}

Waveform square(double f0, int rate, double seconds, double amp) {
  std::vector<std::pair<int, double>> partials;
  for (int k = 1; k * f0 < rate / 2.0; k += 2) partials.emplace_back(k, amp * 4.0 / (std::numbers::pi * k));
  return tone(partials, f0, rate, seconds);
}

}  // namespace

TEST_CASE("fad oracles") {
  Rng rng(1);
  EmbeddingSet a;
  a.vectors.resize(100, 4);
  for (Eigen::Index i = 0; i < a.vectors.size(); ++i) a.vectors.data()[i] = rng.normal();
  CHECK(std::abs(fad(a, a)) < 1e-6);
  EmbeddingSet shifted = a;
  shifted.vectors.col(0).array() += 2.0;
  CHECK(fad(a, shifted) == doctest::Approx(4.0).epsilon(1e-6));
  EmbeddingSet one;
  one.vectors.resize(1, 4);
  CHECK_THROWS_AS(fad(a, one), ValidationError);
}

TEST_CASE("thd oracles") {
  // Harmonics at 1/k for odd k, read up to k = 10: sqrt(1/9 + 1/25 + 1/49 + 1/81).
  const double ten = std::sqrt(1.0 / 9 + 1.0 / 25 + 1.0 / 49 + 1.0 / 81);
  CHECK(thd(square(440.0, 32000, 1.0, 0.5)) == doctest::Approx(ten).epsilon(0.01));
  CHECK(thd(tone({{1, 0.5}}, 440.0, 32000, 1.0)) < 0.01);
  CHECK(thd(tone({{1, 0.5}, {2, 0.25}}, 500.0, 32000, 1.0)) == doctest::Approx(0.5).epsilon(0.01));
  const auto w = square(330.0, 32000, 0.5, 0.2);
  std::vector<double> louder(w.data());
  for (auto& v : louder) v *= 3.0;
  CHECK(thd(Waveform(louder, 32000)) == doctest::Approx(thd(w)).epsilon(1e-9));
  CHECK_THROWS_AS(thd(Waveform::silence(1.0, 32000)), ValidationError);
}

TEST_CASE("inception score and kl") {
  PosteriorSet uniform;
  uniform.rows = nn::Matrix::Constant(4, 5, 0.2);
  CHECK(inception_score(uniform) == doctest::Approx(1.0));
  PosteriorSet onehot;
  onehot.rows = nn::Matrix::Identity(5, 5);
  CHECK(inception_score(onehot) == doctest::Approx(5.0));
  Eigen::VectorXd p(2), q(2);
  p << 0.5, 0.5;
  q << 0.25, 0.75;
  CHECK(kl(p, q) == doctest::Approx(0.1438).epsilon(1e-3));
  CHECK(kl(p, p) == 0.0);
  PosteriorSet bad;
  bad.rows = nn::Matrix::Constant(2, 2, 0.7);
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  PosteriorSet ref, gen;
  ref.rows = nn::Matrix(2, 2);
  ref.rows << 0.5, 0.5, 0.9, 0.1;
  ref.ids = {"a", "b"};
  gen.rows = nn::Matrix(2, 2);
  gen.rows << 0.9, 0.1, 0.5, 0.5;
  gen.ids = {"b", "a"};
  CHECK_THROWS_WITH_AS(kl_divergence(ref, gen), doctest::Contains("misaligned"), ValidationError);
  gen.ids = {"a", "b"};
  gen.rows << 0.5, 0.5, 0.9, 0.1;
  CHECK(kl_divergence(ref, gen) == doctest::Approx(0.0));
}

TEST_CASE("cosine and clap score") {
  Eigen::VectorXd a(2), b(2);
  a << 1.0, 0.0;
  b << 0.0, 2.0;
  CHECK(cosine(a, b) == doctest::Approx(0.0));
  CHECK(cosine(a, -3.0 * a) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(cosine(a, Eigen::VectorXd::Zero(2)), ValidationError);
  CHECK(clap_score({{a, a}, {a, b}}) == doctest::Approx(0.5));
}

TEST_CASE("table rendering") {
  std::vector<ScoreRow> rows = {{"x", {1.0, 0.2, 0.01, 2.0, 1.5}}, {"y", {1.0, 0.1, 0.02, 1.0, 1.2}}};
  const auto t = render_table(rows);
  CHECK(t.find("| Model | FAD↓ | CLAP↑ | KL↓ | THD↓ | ISc↑ |") == 0);
  CHECK(t.find("| x | **1** | **0.2** | **0.01** | 2 | **1.5** |") != std::string::npos);
  CHECK(t.find("| y | **1** | 0.1 | 0.02 | **1** | 1.2 |") != std::string::npos);
  CHECK(clap_text_for("{emotion} song", Emotion::Fun) == "fun song");
}

TEST_CASE("evaluate_suite handles missing files and splits") {
  p2m::testing::TempDir tmp;
  Manifest m;
  const std::vector<std::pair<std::string, Emotion>> items = {
      {"a", Emotion::Sad}, {"b", Emotion::Sad}, {"c", Emotion::Happy}, {"d", Emotion::Happy}};
  fs::create_directories(tmp / "audio");
  fs::create_directories(tmp / "gen");
  double f0 = 200.0;
  for (const auto& [id, e] : items) {
    PairedSample s;
    s.id = id;
    s.image_path = id + ".png";
    s.audio_path = "audio/" + id + ".wav";
    s.emotion = e;
    m.samples.push_back(s);
    audio::write_wav16(square(f0, 32000, 2.0, 0.3), tmp / s.audio_path);
    if (id != "d") audio::write_wav16(square(f0 * 1.1, 32000, 2.0, 0.3), tmp / "gen" / (id + ".wav"));
    f0 += 90.0;
  }
  ToyEmbedder emb;
  ToyAudioClassifier cls;
  ToyClap clap;
  EvaluateOptions opts;
  opts.split.reset();
  const auto report = evaluate_suite(m, tmp.path(), tmp / "gen", {emb, cls, clap}, opts);
  CHECK(report.missing == std::vector<std::string>{"d"});
  CHECK(report.n_gen == 3);
  CHECK(report.per_emotion.count(Emotion::Sad) == 1);
  CHECK(report.scores.clap >= -1.0);
  CHECK(report.scores.clap <= 1.0);
  CHECK(report.scores.isc >= 1.0 - 1e-9);
  const auto json_text = report_to_json(report);
  CHECK(json_text.find("\"missing\"") != std::string::npos);

  EvaluateOptions test_only;  // default split: test, which is empty here
  CHECK_THROWS_AS(evaluate_suite(m, tmp.path(), tmp / "gen", {emb, cls, clap}, test_only), ValidationError);
  CHECK_THROWS_AS(evaluate_suite(m, tmp.path(), tmp / "audio-none", {emb, cls, clap}, opts), Error);
}
