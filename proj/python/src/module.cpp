#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "p2m/core/emotion.hpp"
#include "p2m/core/error.hpp"
#include "p2m/core/hash.hpp"
#include "p2m/emotion/classifier.hpp"
#include "p2m/metrics/metrics.hpp"
#include "p2m/pipeline/cli.hpp"

namespace py = pybind11;
using namespace p2m;

namespace {

metrics::PosteriorSet posteriors(const metrics::Matrix& rows, std::vector<std::string> ids) {
  metrics::PosteriorSet s{rows, std::move(ids)};
  s.validate();
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.attr("__version__") = P2M_VERSION;

  // Translators run newest first, so the base class goes in first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  py::list emotions;
  for (Emotion e : kAllEmotions) emotions.append(std::string(to_string(e)));
  m.attr("EMOTIONS") = py::tuple(emotions);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = pipeline::dispatch(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the p2m command line in-process. Returns (exit code, stdout, stderr).");

  m.def(
      "fad",
      [](const metrics::Matrix& ref, const metrics::Matrix& gen) {
        return metrics::fad({ref, "python"}, {gen, "python"});
      },
      py::arg("reference"), py::arg("generated"), "Frechet distance between two n x d embedding sets.");

  m.def(
      "clap_score",
      [](const metrics::Matrix& text, const metrics::Matrix& audio) {
        if (text.rows() != audio.rows() || text.cols() != audio.cols()) {
          throw ValidationError("text and audio embeddings must have the same shape");
        }
        std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;
        for (Eigen::Index i = 0; i < text.rows(); ++i) pairs.emplace_back(text.row(i), audio.row(i));
        return metrics::clap_score(pairs);
      },
      py::arg("text"), py::arg("audio"), "Mean cosine similarity of paired rows.");

  m.def(
      "thd",
      [](std::vector<double> samples, int sample_rate, int max_harmonics) {
        metrics::ThdParams p;
        p.max_harmonics = max_harmonics;
        return metrics::thd(Waveform(std::move(samples), sample_rate), p);
      },
      py::arg("samples"), py::arg("sample_rate") = kCanonicalSampleRate, py::arg("max_harmonics") = 10);

  m.def(
      "inception_score",
      [](const metrics::Matrix& rows, int splits) { return metrics::inception_score(posteriors(rows, {}), splits); },
      py::arg("posteriors"), py::arg("splits") = 1);

  m.def("kl", &metrics::kl, py::arg("p"), py::arg("q"), "KL(p || q) in nats.");

  m.def(
      "kl_divergence",
      [](const metrics::Matrix& ref, const metrics::Matrix& gen) {
        return metrics::kl_divergence(posteriors(ref, {}), posteriors(gen, {}));
      },
      py::arg("reference"), py::arg("generated"), "Mean row-wise KL(ref_i || gen_i).");

  m.def(
      "predict_emotion",
      [](const std::filesystem::path& checkpoint, const std::filesystem::path& image) {
        const auto model = emotion::load_classifier(checkpoint);
        const auto p = emotion::predict_emotion(*model, image);
        py::dict dist;
        for (Emotion e : kAllEmotions) dist[py::str(std::string(to_string(e)))] = p.distribution[index_of(e)];
        return py::make_tuple(std::string(to_string(p.label)), dist);
      },
      py::arg("checkpoint"), py::arg("image"), "Returns (label, {emotion: probability}).");

  m.def("sha256_file", &sha256_file, py::arg("path"));
}
