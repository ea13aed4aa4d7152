#include "p2m/generation/music_lm.hpp"

#include <cmath>

#include "p2m/core/error.hpp"

namespace p2m::gen {

using nn::Matrix;
using nn::Var;

namespace {

// Residual branch outputs start small so the un-normalised stack stays
// well scaled at initialisation.
constexpr double kBranchOutScale = 0.1;

void append(std::vector<std::string>& out, const nn::Linear& l) {
  out.push_back(l.weight);
  out.push_back(l.bias);
}

void append(std::vector<std::string>& out, const nn::MultiHeadAttention& a) {
  for (const auto* l : {&a.q, &a.k, &a.v, &a.o}) append(out, *l);
}

Matrix dense(const nn::ParameterStore& s, const nn::Linear& l, const Matrix& x) {
  return (x * s.at(l.weight).value()).rowwise() + s.at(l.bias).value().row(0);
}

// One query row against cached keys and values, matching MultiHeadAttention.
Matrix attend(const nn::ParameterStore& s, const nn::MultiHeadAttention& a, const Matrix& q, const Matrix& keys,
              const Matrix& values, Eigen::Index used) {
  const Eigen::Index dh = a.dim / a.heads;
  const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
  Matrix cat(1, a.dim);
  for (int h = 0; h < a.heads; ++h) {
    const Matrix scores =
        (q.middleCols(h * dh, dh) * keys.topRows(used).middleCols(h * dh, dh).transpose()) * inv;
    const double mx = scores.maxCoeff();
    Matrix w = (scores.array() - mx).exp().matrix();
    w /= w.sum();
    cat.middleCols(h * dh, dh) = w * values.topRows(used).middleCols(h * dh, dh);
  }
  return dense(s, a.o, cat);
}

}  // namespace

void ToyMusicLmConfig::validate() const {
  if (codebooks < 1 || codebook_size < 2) throw ValidationError("music LM needs >= 1 codebook of >= 2 codes");
  if (d_model < 1 || heads < 1 || d_model % heads != 0) {
    throw ValidationError("music LM d_model " + std::to_string(d_model) + " is not divisible by " +
                          std::to_string(heads) + " heads");
  }
  if (layers < 1 || mlp_dim < 1 || text_dim < 1) throw ValidationError("music LM sizes must be positive");
  if (!(head_init_std >= 0.0)) throw ValidationError("head_init_std must be >= 0");
}

ToyMusicLm::ToyMusicLm(ToyMusicLmConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(derive_seed(cfg_.init_seed, "music-lm"));
  const int d = cfg_.d_model;
  const double attn_std = 1.0 / std::sqrt(static_cast<double>(d));
  text_proj_ = nn::Linear(store_, "text_proj", cfg_.text_dim, d, 1.0 / std::sqrt(cfg_.text_dim), rng);
  for (int k = 0; k < cfg_.codebooks; ++k) {
    embeddings_.push_back("embed.k" + std::to_string(k));
    store_.add_normal(embeddings_.back(), cfg_.codebook_size + 1, d, 0.1, rng);
  }
  for (int i = 0; i < cfg_.layers; ++i) {
    const std::string p = "layer" + std::to_string(i);
    Layer l;
    l.self_attn = nn::MultiHeadAttention(store_, p + ".self", d, cfg_.heads, attn_std, rng);
    l.cross_attn = nn::MultiHeadAttention(store_, p + ".cross", d, cfg_.heads, attn_std, rng);
    l.mlp_in = nn::Linear(store_, p + ".mlp_in", d, cfg_.mlp_dim, attn_std, rng);
    l.mlp_out = nn::Linear(store_, p + ".mlp_out", cfg_.mlp_dim, d, 1.0 / std::sqrt(cfg_.mlp_dim), rng);
    for (const auto* name : {&l.self_attn.o.weight, &l.cross_attn.o.weight, &l.mlp_out.weight}) {
      store_.at(*name).mutable_value() *= kBranchOutScale;
    }
    layers_.push_back(std::move(l));
  }
  for (int k = 0; k < cfg_.codebooks; ++k) {
    heads_.emplace_back(store_, "head.k" + std::to_string(k), d, cfg_.codebook_size, cfg_.head_init_std, rng);
  }
}

std::vector<std::string> ToyMusicLm::text_encoder_parameter_names() const {
  std::vector<std::string> out;
  append(out, text_proj_);
  return out;
}

std::vector<std::string> ToyMusicLm::embedding_parameter_names() const { return embeddings_; }

std::vector<std::string> ToyMusicLm::layer_parameter_names(int layer) const {
  if (layer < 0 || layer >= cfg_.layers) throw ValidationError("layer index out of range");
  const Layer& l = layers_[static_cast<std::size_t>(layer)];
  std::vector<std::string> out;
  append(out, l.self_attn);
  append(out, l.cross_attn);
  append(out, l.mlp_in);
  append(out, l.mlp_out);
  return out;
}

std::vector<std::string> ToyMusicLm::head_parameter_names() const {
  std::vector<std::string> out;
  for (const auto& h : heads_) append(out, h);
  return out;
}

Matrix ToyMusicLm::positions(int steps) const {
  const int d = cfg_.d_model;
  Matrix pe(steps, d);
  for (int t = 0; t < steps; ++t) {
    for (int j = 0; j < d; ++j) {
      const double freq = std::pow(10000.0, -static_cast<double>(j / 2 * 2) / d);
      pe(t, j) = j % 2 == 0 ? std::sin(t * freq) : std::cos(t * freq);
    }
  }
  return pe;
}

void ToyMusicLm::check_inputs(const TokenGrid& tokens, const EmbeddingSeq& text) const {
  if (tokens.codebooks() != cfg_.codebooks || tokens.codebook_size() != cfg_.codebook_size) {
    throw ValidationError("token grid is " + std::to_string(tokens.codebooks()) + "x" +
                          std::to_string(tokens.codebook_size()) + " codes but the model expects " +
                          std::to_string(cfg_.codebooks) + "x" + std::to_string(cfg_.codebook_size));
  }
  if (tokens.timesteps() < 1) throw ValidationError("token grid has no timesteps");
  text.validate();
  if (text.vectors.cols() != cfg_.text_dim) {
    throw ValidationError("text embedding dim " + std::to_string(text.vectors.cols()) + " != model text dim " +
                          std::to_string(cfg_.text_dim));
  }
}

std::vector<Var> ToyMusicLm::forward(const TokenGrid& tokens, const EmbeddingSeq& text) const {
  check_inputs(tokens, text);
  const int steps = tokens.timesteps();
  const Var memory = text_proj_(store_, nn::constant(text.vectors));
  Var x = nn::constant(positions(steps));
  for (int k = 0; k < cfg_.codebooks; ++k) {
    Matrix onehot = Matrix::Zero(steps, cfg_.codebook_size + 1);
    onehot(0, cfg_.codebook_size) = 1.0;
    for (int t = 1; t < steps; ++t) onehot(t, tokens.at(k, t - 1)) = 1.0;
    x = nn::add(x, nn::matmul(nn::constant(std::move(onehot)), store_.at(embeddings_[static_cast<std::size_t>(k)])));
  }
  for (const auto& l : layers_) {
    x = nn::add(x, l.self_attn(store_, x, x, true));
    x = nn::add(x, l.cross_attn(store_, x, memory, false));
    x = nn::add(x, l.mlp_out(store_, nn::relu(l.mlp_in(store_, x))));
  }
  std::vector<Var> out;
  for (const auto& h : heads_) out.push_back(h(store_, x));
  return out;
}

Var ToyMusicLm::loss(const TokenGrid& tokens, const EmbeddingSeq& text, const std::vector<double>& mask) const {
  if (!mask.empty() && mask.size() != static_cast<std::size_t>(tokens.timesteps())) {
    throw ValidationError("loss mask length differs from the number of timesteps");
  }
  const auto logits = forward(tokens, text);
  Var total;
  for (int k = 0; k < cfg_.codebooks; ++k) {
    std::vector<int> targets(static_cast<std::size_t>(tokens.timesteps()));
    for (int t = 0; t < tokens.timesteps(); ++t) targets[static_cast<std::size_t>(t)] = tokens.at(k, t);
    const Var ce = nn::cross_entropy(logits[static_cast<std::size_t>(k)], targets, mask);
    total = total.defined() ? nn::add(total, ce) : ce;
  }
  return nn::scale(total, 1.0 / cfg_.codebooks);
}

std::vector<Matrix> ToyMusicLm::logits(const TokenGrid& tokens, const EmbeddingSeq& text) const {
  std::vector<Matrix> out;
  for (const auto& v : forward(tokens, text)) out.push_back(v.value());
  return out;
}

/// Key/value-cached decoder state for one sequence.
class ToyMusicLm::Stepper {
 public:
  Stepper(const ToyMusicLm& m, const EmbeddingSeq& text, int max_steps)
      : m_(m), pe_(m.positions(max_steps)) {
    const auto& s = m.store_;
    const Matrix memory = dense(s, m.text_proj_, text.vectors);
    for (const auto& l : m.layers_) {
      cross_k_.push_back(dense(s, l.cross_attn.k, memory));
      cross_v_.push_back(dense(s, l.cross_attn.v, memory));
      self_k_.emplace_back(max_steps, m.cfg_.d_model);
      self_v_.emplace_back(max_steps, m.cfg_.d_model);
    }
  }

  /// Feeds the codes of frame t-1 (nullptr at t = 0) and returns one logit
  /// row per codebook for frame t.
  std::vector<Matrix> step(const std::vector<int>* previous) {
    const auto& s = m_.store_;
    const int V = m_.cfg_.codebook_size;
    Matrix x = pe_.row(t_);
    for (int k = 0; k < m_.cfg_.codebooks; ++k) {
      const int code = previous == nullptr ? V : (*previous)[static_cast<std::size_t>(k)];
      x += s.at(m_.embeddings_[static_cast<std::size_t>(k)]).value().row(code);
    }
    for (std::size_t i = 0; i < m_.layers_.size(); ++i) {
      const Layer& l = m_.layers_[i];
      self_k_[i].row(t_) = dense(s, l.self_attn.k, x);
      self_v_[i].row(t_) = dense(s, l.self_attn.v, x);
      x += attend(s, l.self_attn, dense(s, l.self_attn.q, x), self_k_[i], self_v_[i], t_ + 1);
      x += attend(s, l.cross_attn, dense(s, l.cross_attn.q, x), cross_k_[i], cross_v_[i], cross_k_[i].rows());
      x += dense(s, l.mlp_out, dense(s, l.mlp_in, x).cwiseMax(0.0));
    }
    ++t_;
    std::vector<Matrix> out;
    for (const auto& h : m_.heads_) out.push_back(dense(s, h, x));
    return out;
  }

 private:
  const ToyMusicLm& m_;
  Matrix pe_;
  std::vector<Matrix> cross_k_, cross_v_, self_k_, self_v_;
  int t_ = 0;
};

std::vector<Matrix> ToyMusicLm::incremental_logits(const TokenGrid& tokens, const EmbeddingSeq& text) const {
  check_inputs(tokens, text);
  const int steps = tokens.timesteps();
  Stepper stepper(*this, text, steps);
  std::vector<Matrix> out(static_cast<std::size_t>(cfg_.codebooks), Matrix(steps, cfg_.codebook_size));
  std::vector<int> prev(static_cast<std::size_t>(cfg_.codebooks));
  for (int t = 0; t < steps; ++t) {
    const auto rows = stepper.step(t == 0 ? nullptr : &prev);
    for (int k = 0; k < cfg_.codebooks; ++k) {
      out[static_cast<std::size_t>(k)].row(t) = rows[static_cast<std::size_t>(k)];
      prev[static_cast<std::size_t>(k)] = tokens.at(k, t);
    }
  }
  return out;
}

TokenGrid ToyMusicLm::generate_tokens(const EmbeddingSeq& text, int steps, int top_k, double temperature,
                                      double frame_rate, Rng& rng) const {
  if (steps < 1) throw ValidationError("generation needs at least one step");
  text.validate();
  if (text.vectors.cols() != cfg_.text_dim) throw ValidationError("text embedding dim does not match the model");
  TokenGrid grid(cfg_.codebooks, steps, cfg_.codebook_size, frame_rate);
  Stepper stepper(*this, text, steps);
  std::vector<int> prev(static_cast<std::size_t>(cfg_.codebooks));
  for (int t = 0; t < steps; ++t) {
    const auto rows = stepper.step(t == 0 ? nullptr : &prev);
    for (int k = 0; k < cfg_.codebooks; ++k) {
      const Matrix& r = rows[static_cast<std::size_t>(k)];
      const int code = sample_topk(std::span<const double>(r.data(), static_cast<std::size_t>(r.size())), top_k,
                                   temperature, rng);
      grid.set(k, t, code);
      prev[static_cast<std::size_t>(k)] = code;
    }
  }
  return grid;
}

}  // namespace p2m::gen
