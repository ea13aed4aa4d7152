#include "p2m/metrics/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "p2m/audio/resample.hpp"
#include "p2m/audio/wav.hpp"
#include "p2m/core/error.hpp"
#include "p2m/core/parallel.hpp"

namespace p2m::metrics {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Waveform load_canonical(const std::filesystem::path& path) {
  auto w = audio::read_wav(path);
  if (w.sample_rate() != kCanonicalSampleRate) w = audio::resample(w, kCanonicalSampleRate);
  return w;
}

struct SampleResult {
  std::string id;
  Emotion emotion = Emotion::Neutral;
  Matrix ref_embedding, gen_embedding;
  Eigen::VectorXd ref_posterior, gen_posterior;
  double clap = 0.0;
  std::optional<double> thd;
};

Matrix stack(const std::vector<const SampleResult*>& rs, bool generated) {
  Eigen::Index rows = 0, cols = 0;
  for (const auto* r : rs) {
    const auto& m = generated ? r->gen_embedding : r->ref_embedding;
    rows += m.rows();
    cols = m.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const auto* r : rs) {
    const auto& m = generated ? r->gen_embedding : r->ref_embedding;
    out.middleRows(at, m.rows()) = m;
    at += m.rows();
  }
  return out;
}

PosteriorSet posteriors(const std::vector<const SampleResult*>& rs, bool generated) {
  PosteriorSet p;
  p.rows.resize(static_cast<Eigen::Index>(rs.size()), static_cast<Eigen::Index>(kNumEmotions));
  for (std::size_t i = 0; i < rs.size(); ++i) {
    p.rows.row(static_cast<Eigen::Index>(i)) = (generated ? rs[i]->gen_posterior : rs[i]->ref_posterior).transpose();
    p.ids.push_back(rs[i]->id);
  }
  return p;
}

MetricScores aggregate(const std::vector<const SampleResult*>& rs, const std::string& embedder_id) {
  MetricScores s;
  const EmbeddingSet ref{stack(rs, false), embedder_id};
  const EmbeddingSet gen{stack(rs, true), embedder_id};
  s.fad = ref.vectors.rows() >= 2 && gen.vectors.rows() >= 2 ? fad(ref, gen) : kNaN;
  double clap = 0.0, thd_sum = 0.0;
  int thd_n = 0;
  for (const auto* r : rs) {
    clap += r->clap;
    if (r->thd) {
      thd_sum += *r->thd;
      ++thd_n;
    }
  }
  s.clap = clap / static_cast<double>(rs.size());
  s.thd = thd_n > 0 ? thd_sum / thd_n : kNaN;
  s.kl = kl_divergence(posteriors(rs, false), posteriors(rs, true));
  s.isc = inception_score(posteriors(rs, true), 1);
  return s;
}

json score_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json scores_json(const MetricScores& s) {
  return {{"fad", score_json(s.fad)},
          {"clap", score_json(s.clap)},
          {"kl", score_json(s.kl)},
          {"thd", score_json(s.thd)},
          {"isc", score_json(s.isc)}};
}

std::string format_score(double v) {
  if (!std::isfinite(v)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double read_score(const json& row, const char* key) {
  if (!row.contains(key) || row[key].is_null()) return kNaN;
  return row[key].get<double>();
}

}  // namespace

std::string clap_text_for(const std::string& tmpl, Emotion e) {
  std::string out = tmpl;
  const std::string key = "{emotion}";
  for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos)) {
    out.replace(pos, key.size(), to_string(e));
    pos += to_string(e).size();
  }
  return out;
}

MetricReport evaluate_suite(const Manifest& manifest, const std::filesystem::path& manifest_dir,
                            const std::filesystem::path& generated_dir, const EvaluateBackends& backends,
                            const EvaluateOptions& opts) {
  bool any_wav = false;
  if (std::filesystem::is_directory(generated_dir)) {
    for (const auto& entry : std::filesystem::directory_iterator(generated_dir)) {
      if (entry.path().extension() == ".wav") {
        any_wav = true;
        break;
      }
    }
  }
  if (!any_wav) throw ValidationError("no generated .wav files in " + generated_dir.string());

  std::vector<const PairedSample*> samples;
  for (const auto& s : manifest.samples) {
    if (!opts.split || s.split == *opts.split) samples.push_back(&s);
  }
  std::sort(samples.begin(), samples.end(), [](const auto* a, const auto* b) { return a->id < b->id; });

  MetricReport report;
  report.model = opts.model;
  report.embedder_id = backends.embedder.id();
  report.classifier_id = backends.classifier.id();
  report.clap_id = backends.clap.id();
  report.clap_text_template = opts.clap_text_template;
  report.n_ref = samples.size();

  std::vector<const PairedSample*> present;
  for (const auto* s : samples) {
    if (std::filesystem::exists(generated_dir / (s->id + ".wav"))) {
      present.push_back(s);
    } else {
      report.missing.push_back(s->id);
      spdlog::warn("no generated audio for sample {}; excluded", s->id);
    }
  }
  if (present.empty()) {
    throw ValidationError("none of the " + std::to_string(samples.size()) + " selected samples has a generated file in " +
                          generated_dir.string());
  }
  report.n_gen = present.size();

  std::vector<SampleResult> results(present.size());
  parallel_for(present.size(), opts.threads, [&](std::size_t i) {
    const auto& s = *present[i];
    try {
      const auto ref = load_canonical(manifest_dir / s.audio_path);
      const auto gen = load_canonical(generated_dir / (s.id + ".wav"));
      SampleResult r;
      r.id = s.id;
      r.emotion = s.emotion;
      r.ref_embedding = backends.embedder.embed(ref);
      r.gen_embedding = backends.embedder.embed(gen);
      r.ref_posterior = backends.classifier.posterior(ref);
      r.gen_posterior = backends.classifier.posterior(gen);
      const auto it = opts.clap_text.find(s.id);
      const std::string text = it != opts.clap_text.end() ? it->second : clap_text_for(opts.clap_text_template, s.emotion);
      r.clap = cosine(backends.clap.embed_text(text), backends.clap.embed_audio(gen));
      try {
        r.thd = thd(gen, opts.thd);
      } catch (const ValidationError&) {
        r.thd.reset();
      }
      results[i] = std::move(r);
    } catch (const Error& e) {
      throw Error("evaluating sample " + s.id + ": " + e.what());
    }
  });

  std::vector<const SampleResult*> all;
  for (const auto& r : results) {
    all.push_back(&r);
    if (!r.thd) report.thd_unmeasured.push_back(r.id);
  }
  report.scores = aggregate(all, report.embedder_id);
  for (Emotion e : kAllEmotions) {
    std::vector<const SampleResult*> part;
    for (const auto* r : all) {
      if (r->emotion == e) part.push_back(r);
    }
    if (!part.empty()) report.per_emotion[e] = aggregate(part, report.embedder_id);
  }
  return report;
}

std::string report_to_json(const MetricReport& r) {
  json per = json::object();
  for (const auto& [e, s] : r.per_emotion) per[std::string(to_string(e))] = scores_json(s);
  const json j = {{"model", r.model},
                  {"scores", scores_json(r.scores)},
                  {"per_emotion", per},
                  {"n_ref", r.n_ref},
                  {"n_gen", r.n_gen},
                  {"excluded", r.missing.size()},
                  {"missing", r.missing},
                  {"thd_unmeasured", r.thd_unmeasured},
                  {"backends", {{"embedder", r.embedder_id}, {"classifier", r.classifier_id}, {"clap", r.clap_id}}},
                  {"clap_text_template", r.clap_text_template}};
  return j.dump(2) + "\n";
}

std::string render_table(const std::vector<ScoreRow>& rows) {
  struct Column {
    const char* title;
    double MetricScores::*field;
    bool lower_is_better;
  };
  const Column columns[] = {{"FAD↓", &MetricScores::fad, true},
                            {"CLAP↑", &MetricScores::clap, false},
                            {"KL↓", &MetricScores::kl, true},
                            {"THD↓", &MetricScores::thd, true},
                            {"ISc↑", &MetricScores::isc, false}};
  std::string out = "| Model |";
  for (const auto& c : columns) out += std::string(" ") + c.title + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < std::size(columns); ++i) out += "---|";
  out += "\n";
  std::vector<double> best;
  for (const auto& c : columns) {
    double b = kNaN;
    for (const auto& r : rows) {
      const double v = r.scores.*c.field;
      if (!std::isfinite(v)) continue;
      if (!std::isfinite(b) || (c.lower_is_better ? v < b : v > b)) b = v;
    }
    best.push_back(b);
  }
  for (const auto& r : rows) {
    out += "| " + r.model + " |";
    for (std::size_t i = 0; i < std::size(columns); ++i) {
      const double v = r.scores.*columns[i].field;
      const std::string cell = format_score(v);
      out += " " + (std::isfinite(v) && v == best[i] ? "**" + cell + "**" : cell) + " |";
    }
    out += "\n";
  }
  return out;
}

std::vector<ScoreRow> load_score_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  if (!j.contains("rows") || !j["rows"].is_array()) throw IoError(path.string() + ": expected a \"rows\" array");
  std::vector<ScoreRow> rows;
  for (const auto& row : j["rows"]) {
    ScoreRow r;
    r.model = row.at("model").get<std::string>();
    r.scores = {read_score(row, "fad"), read_score(row, "clap"), read_score(row, "kl"), read_score(row, "thd"),
                read_score(row, "isc")};
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ScoreRow> report_rows(const MetricReport& report) {
  std::vector<ScoreRow> rows = {{report.model, report.scores}};
  for (const auto& [e, s] : report.per_emotion) rows.push_back({report.model + " / " + std::string(to_string(e)), s});
  return rows;
}

}  // namespace p2m::metrics
