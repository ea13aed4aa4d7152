#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "p2m/core/rng.hpp"
#include "p2m/nn/autodiff.hpp"

namespace p2m::nn {

/// Named, ordered collection of trainable matrices.
class ParameterStore {
 public:
  /// Registers a parameter; names must be unique.
  Var& add(const std::string& name, Matrix init);
  /// N(0, std^2) initialisation.
  Var& add_normal(const std::string& name, Eigen::Index rows, Eigen::Index cols, double std, Rng& rng);
  Var& add_zeros(const std::string& name, Eigen::Index rows, Eigen::Index cols);

  Var& at(const std::string& name);
  [[nodiscard]] const Var& at(const std::string& name) const;
  [[nodiscard]] bool contains(const std::string& name) const { return index_.count(name) != 0; }
  [[nodiscard]] const std::vector<std::string>& names() const { return names_; }
  [[nodiscard]] std::size_t size() const { return names_.size(); }
  [[nodiscard]] std::size_t scalar_count() const;

  /// Frozen parameters stop requiring gradients and are skipped by optimisers.
  void set_frozen(const std::string& name, bool frozen);
  [[nodiscard]] bool frozen(const std::string& name) const;

  void zero_grad();

  /// SHA-256 over names, shapes and raw values of the selected parameters
  /// (all when `subset` is empty).
  [[nodiscard]] std::string hash(const std::vector<std::string>& subset = {}) const;

  /// Binary blob: "P2MP", u32 version, u32 count, then per parameter
  /// (u32 name length, name, u32 rows, u32 cols, little-endian doubles).
  [[nodiscard]] std::vector<std::uint8_t> serialize() const;
  /// Loads values into already-registered parameters; names and shapes must match.
  void deserialize(const std::vector<std::uint8_t>& blob, const std::string& origin = "<memory>");

  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  std::vector<std::string> names_;
  std::map<std::string, Var> index_;
  std::set<std::string> frozen_;
};

struct Linear {
  std::string weight, bias;
  Linear() = default;
  Linear(ParameterStore& store, const std::string& prefix, Eigen::Index in, Eigen::Index out, double std, Rng& rng);
  Var operator()(const ParameterStore& store, const Var& x) const;
};

/// One direction of a GRU (PyTorch gate layout r, z, n).
struct GruDirection {
  std::string w_input, b_input, w_hidden, b_hidden;
  Eigen::Index hidden = 0;
  GruDirection() = default;
  GruDirection(ParameterStore& store, const std::string& prefix, Eigen::Index in, Eigen::Index hidden, Rng& rng);
  /// x: T x in. Returns T x hidden in time order (also when run backwards).
  Var operator()(const ParameterStore& store, const Var& x, bool reverse) const;
};

struct BiGru {
  GruDirection forward, backward;
  BiGru() = default;
  BiGru(ParameterStore& store, const std::string& prefix, Eigen::Index in, Eigen::Index hidden, Rng& rng);
  /// T x in -> T x 2*hidden (forward states, then backward states).
  Var operator()(const ParameterStore& store, const Var& x) const;
};

struct MultiHeadAttention {
  Linear q, k, v, o;
  Eigen::Index dim = 0;
  int heads = 1;
  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterStore& store, const std::string& prefix, Eigen::Index dim, int heads, double std,
                     Rng& rng);
  /// queries: Tq x dim, memory: Tk x dim.
  Var operator()(const ParameterStore& store, const Var& queries, const Var& memory, bool causal) const;
};

}  // namespace p2m::nn
