#pragma once

#include <string>
#include <utility>
#include <vector>

#include "p2m/core/waveform.hpp"
#include "p2m/nn/autodiff.hpp"

namespace p2m::metrics {

using nn::Matrix;

/// n x d embeddings from one backend. n >= 2, finite.
struct EmbeddingSet {
  Matrix vectors;
  std::string backend_id;

  void validate() const;
};

/// n x C class posteriors; rows nonnegative and summing to 1 within 1e-6.
/// `ids` (optional) name the rows for pairing.
struct PosteriorSet {
  Matrix rows;
  std::vector<std::string> ids;

  void validate() const;
};

inline constexpr double kFadEpsilon = 1e-6;
inline constexpr double kProbFloor = 1e-12;

/// Frechet distance between Gaussians fitted to the two sets (unbiased
/// covariance). The cross term uses the eigendecomposition of
/// sqrt(A) B sqrt(A) with A, B regularised by kFadEpsilon * I and negative
/// eigenvalues clamped.
double fad(const EmbeddingSet& ref, const EmbeddingSet& gen);

/// Cosine similarity; throws ValidationError for a zero vector.
double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Mean cosine over (text, audio) pairs.
double clap_score(const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& pairs);

struct ThdParams {
  int frame = 2048;
  int hop = 1024;
  int max_harmonics = 10;
  double silence_dbfs = -80.0;
  double min_fundamental_hz = 20.0;
};

/// Frame-averaged total harmonic distortion. Each Hann-windowed frame takes
/// its largest bin above min_fundamental_hz as the fundamental and reads
/// harmonics k = 2..max_harmonics below Nyquist at the bins nearest k*f1.
/// f1 is refined with the Hann two-bin ratio and every bin read is corrected
/// for scalloping loss. Frames with no bin above the silence floor are
/// skipped.
double thd(const Waveform& w, const ThdParams& params = {});

/// exp(mean KL(row || marginal)) averaged over `splits` contiguous splits.
double inception_score(const PosteriorSet& posteriors, int splits = 1);

/// KL(p || q) in nats with a 1e-12 floor on both.
double kl(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

/// Mean KL(ref_i || gen_i) over rows paired by id (by position when neither
/// set has ids).
double kl_divergence(const PosteriorSet& ref, const PosteriorSet& gen);

}  // namespace p2m::metrics
