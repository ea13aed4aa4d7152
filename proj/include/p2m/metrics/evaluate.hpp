#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "p2m/core/manifest.hpp"
#include "p2m/metrics/backends.hpp"
#include "p2m/metrics/metrics.hpp"

namespace p2m::metrics {

/// NaN marks a score that could not be computed (serialised as null).
struct MetricScores {
  double fad = 0.0;
  double clap = 0.0;
  double kl = 0.0;
  double thd = 0.0;
  double isc = 0.0;
};

struct MetricReport {
  std::string model;
  MetricScores scores;
  std::map<Emotion, MetricScores> per_emotion;
  std::size_t n_ref = 0;
  std::size_t n_gen = 0;
  std::vector<std::string> missing;         // samples without a generated file
  std::vector<std::string> thd_unmeasured;  // generated clips with no measurable THD frame
  std::string embedder_id, classifier_id, clap_id;
  std::string clap_text_template;
};

struct EvaluateOptions {
  std::optional<Split> split = Split::Test;  // nullopt: every sample
  std::string model = "model";
  std::string clap_text_template = "{emotion} song";
  /// Per-sample CLAP text overrides keyed by sample id.
  std::map<std::string, std::string> clap_text;
  ThdParams thd;
  unsigned threads = 0;
};

struct EvaluateBackends {
  const AudioEmbedder& embedder;
  const AudioClassifier& classifier;
  const ClapModel& clap;
};

/// "{emotion}" in the template is replaced by the label.
std::string clap_text_for(const std::string& tmpl, Emotion e);

/// Scores `<generated_dir>/<id>.wav` against each sample's reference audio
/// for every sample of `opts.split`, globally and per emotion. Samples
/// without a generated file are listed in `missing` and excluded; no usable
/// sample at all is an error.
MetricReport evaluate_suite(const Manifest& manifest, const std::filesystem::path& manifest_dir,
                            const std::filesystem::path& generated_dir, const EvaluateBackends& backends,
                            const EvaluateOptions& opts = {});

/// Canonical JSON (sorted keys, two-space indent, trailing newline).
std::string report_to_json(const MetricReport& report);

struct ScoreRow {
  std::string model;
  MetricScores scores;
};

/// Markdown table with columns Model, FAD↓, CLAP↑, KL↓, THD↓, ISc↑. The best
/// value of each column is bold (lowest for ↓, highest for ↑; ties are all
/// bold). Numbers use up to four significant digits.
std::string render_table(const std::vector<ScoreRow>& rows);

/// Reads {"rows": [{"model": ..., "fad": ..., "clap": ..., "kl": ...,
/// "thd": ..., "isc": ...}, ...]}.
std::vector<ScoreRow> load_score_rows(const std::filesystem::path& path);

/// Global row plus one "<model> / <emotion>" row per emotion.
std::vector<ScoreRow> report_rows(const MetricReport& report);

}  // namespace p2m::metrics
