#include "p2m/metrics/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "p2m/audio/fft.hpp"
#include "p2m/core/error.hpp"

namespace p2m::metrics {

namespace {

Eigen::VectorXd column_mean(const Matrix& x) { return x.colwise().mean().transpose(); }

Matrix covariance(const Matrix& x) {
  const Eigen::RowVectorXd mu = x.colwise().mean();
  const Matrix centered = x.rowwise() - mu;
  return (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
}

Matrix sqrt_psd(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  if (eig.info() != Eigen::Success) throw Error("eigendecomposition failed");
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

// Hann main-lobe gain at `delta` bins from the centre, relative to the centre.
double hann_response(double delta) {
  const double d = std::abs(delta);
  if (d < 1e-12) return 1.0;
  const double x = std::numbers::pi * d;
  return std::sin(x) / x / (1.0 - d * d);
}

}  // namespace

void EmbeddingSet::validate() const {
  if (vectors.rows() < 2) {
    throw ValidationError("embedding set needs at least 2 vectors, got " + std::to_string(vectors.rows()));
  }
  if (vectors.cols() < 1) throw ValidationError("embedding set has zero dimensions");
  if (!vectors.allFinite()) throw ValidationError("embedding set has non-finite entries");
}

void PosteriorSet::validate() const {
  if (rows.rows() < 1 || rows.cols() < 1) throw ValidationError("posterior set is empty");
  if (!ids.empty() && ids.size() != static_cast<std::size_t>(rows.rows())) {
    throw ValidationError("posterior ids do not match the number of rows");
  }
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const auto r = rows.row(i);
    if (!r.allFinite() || (r.array() < 0.0).any() || std::abs(r.sum() - 1.0) > 1e-6) {
      throw ValidationError("posterior row " + (ids.empty() ? std::to_string(i) : ids[static_cast<std::size_t>(i)]) +
                            " is not a probability distribution");
    }
  }
}

double fad(const EmbeddingSet& ref, const EmbeddingSet& gen) {
  ref.validate();
  gen.validate();
  if (ref.backend_id != gen.backend_id) {
    throw ValidationError("embedding backends differ: " + ref.backend_id + " vs " + gen.backend_id);
  }
  if (ref.vectors.cols() != gen.vectors.cols()) {
    throw ValidationError("embedding dims differ: " + std::to_string(ref.vectors.cols()) + " vs " +
                          std::to_string(gen.vectors.cols()));
  }
  const auto d = ref.vectors.cols();
  const Eigen::VectorXd diff = column_mean(ref.vectors) - column_mean(gen.vectors);
  const Matrix a = covariance(ref.vectors) + kFadEpsilon * Matrix::Identity(d, d);
  const Matrix b = covariance(gen.vectors) + kFadEpsilon * Matrix::Identity(d, d);
  const Matrix sa = sqrt_psd(a);
  Matrix m = sa * b * sa;
  m = 0.5 * (m + m.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw Error("eigendecomposition failed");
  const double cross = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = diff.squaredNorm() + a.trace() + b.trace() - 2.0 * cross;
  return std::max(0.0, value);
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw ValidationError("cosine of vectors with different dims");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw ValidationError("cosine of a zero-norm vector");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

double clap_score(const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& pairs) {
  if (pairs.empty()) throw ValidationError("clap_score needs at least one pair");
  double sum = 0.0;
  for (const auto& [t, a] : pairs) sum += cosine(t, a);
  return sum / static_cast<double>(pairs.size());
}

double thd(const Waveform& w, const ThdParams& p) {
  if (p.frame < 4 || p.hop < 1 || p.max_harmonics < 2) throw ValidationError("invalid THD parameters");
  if (w.size() < static_cast<std::size_t>(p.frame)) {
    throw ValidationError("signal of " + std::to_string(w.size()) + " samples is shorter than one " +
                          std::to_string(p.frame) + "-sample frame");
  }
  const double sr = w.sample_rate();
  const auto window = audio::hann_window(static_cast<std::size_t>(p.frame));
  double window_sum = 0.0;
  for (double v : window) window_sum += v;
  // A full-scale sinusoid centred on a bin reads 1.0 after this scaling.
  const double to_amplitude = 2.0 / window_sum;
  const double floor_amp = std::pow(10.0, p.silence_dbfs / 20.0);
  const double bin_hz = sr / p.frame;
  const int nyquist_bin = p.frame / 2;
  const int min_bin = static_cast<int>(std::floor(p.min_fundamental_hz / bin_hz)) + 1;

  audio::RealFft fft(static_cast<std::size_t>(p.frame));
  std::vector<double> buf(static_cast<std::size_t>(p.frame));
  const auto s = w.samples();
  double total = 0.0;
  int measured = 0;
  for (std::size_t start = 0; start + static_cast<std::size_t>(p.frame) <= s.size(); start += static_cast<std::size_t>(p.hop)) {
    for (int i = 0; i < p.frame; ++i) buf[i] = s[start + static_cast<std::size_t>(i)] * window[i];
    auto mag = fft.magnitude(buf);
    for (auto& m : mag) m *= to_amplitude;
    int peak = min_bin;
    for (int b = min_bin; b <= nyquist_bin; ++b) {
      if (mag[b] > mag[peak]) peak = b;
    }
    if (!(mag[peak] > floor_amp)) continue;
    // Two-bin ratio estimator for the Hann main lobe gives the fractional
    // offset of the fundamental; every bin read is then corrected for the
    // window's scalloping loss at its known offset.
    double offset = 0.0;
    if (peak < nyquist_bin) {
      const bool right = mag[peak + 1] >= mag[peak - 1];
      const double alpha = mag[right ? peak + 1 : peak - 1] / mag[peak];
      offset = std::clamp((2.0 * alpha - 1.0) / (alpha + 1.0), 0.0, 0.5) * (right ? 1.0 : -1.0);
    }
    const double f1 = (peak + offset) * bin_hz;
    const double a1 = mag[peak] / hann_response(offset);
    double harm = 0.0;
    for (int k = 2; k <= p.max_harmonics; ++k) {
      const double fk = k * f1;
      if (fk >= sr / 2.0) break;
      const double exact = fk / bin_hz;
      const int bin = static_cast<int>(std::lround(exact));
      if (bin > nyquist_bin) break;
      const double ak = mag[bin] / hann_response(exact - bin);
      harm += ak * ak;
    }
    total += std::sqrt(harm) / a1;
    ++measured;
  }
  if (measured == 0) throw ValidationError("no measurable frames: signal is silent below the THD floor");
  return total / measured;
}

double kl(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw ValidationError("KL of distributions with different sizes");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double a = std::max(p(i), kProbFloor);
    const double b = std::max(q(i), kProbFloor);
    sum += a * std::log(a / b);
  }
  return std::max(0.0, sum);
}

double inception_score(const PosteriorSet& posteriors, int splits) {
  posteriors.validate();
  const auto n = posteriors.rows.rows();
  if (splits < 1 || splits > n) {
    throw ValidationError("inception score needs 1 <= splits <= n (splits " + std::to_string(splits) + ", n " +
                          std::to_string(n) + ")");
  }
  double total = 0.0;
  for (int sidx = 0; sidx < splits; ++sidx) {
    const Eigen::Index begin = n * sidx / splits;
    const Eigen::Index end = n * (sidx + 1) / splits;
    const Matrix part = posteriors.rows.middleRows(begin, end - begin);
    const Eigen::VectorXd marginal = column_mean(part);
    double kl_sum = 0.0;
    for (Eigen::Index i = 0; i < part.rows(); ++i) kl_sum += kl(part.row(i).transpose(), marginal);
    total += std::exp(kl_sum / static_cast<double>(part.rows()));
  }
  return total / splits;
}

double kl_divergence(const PosteriorSet& ref, const PosteriorSet& gen) {
  ref.validate();
  gen.validate();
  if (ref.rows.rows() != gen.rows.rows()) {
    throw ValidationError("KL needs equal counts: " + std::to_string(ref.rows.rows()) + " reference vs " +
                          std::to_string(gen.rows.rows()) + " generated");
  }
  if (ref.rows.cols() != gen.rows.cols()) throw ValidationError("KL needs equal class counts");
  if (ref.ids.empty() != gen.ids.empty()) throw ValidationError("KL pairing: only one posterior set has ids");
  for (std::size_t i = 0; i < ref.ids.size(); ++i) {
    if (ref.ids[i] != gen.ids[i]) {
      throw ValidationError("KL pairing misaligned at row " + std::to_string(i) + ": " + ref.ids[i] + " vs " +
                            gen.ids[i]);
    }
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < ref.rows.rows(); ++i) sum += kl(ref.rows.row(i).transpose(), gen.rows.row(i).transpose());
  return sum / static_cast<double>(ref.rows.rows());
}

}  // namespace p2m::metrics
