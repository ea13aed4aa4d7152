#include "p2m/nn/parameters.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "p2m/core/error.hpp"
#include "p2m/core/hash.hpp"

namespace p2m::nn {

Var& ParameterStore::add(const std::string& name, Matrix init) {
  if (index_.count(name)) throw ValidationError("duplicate parameter name " + name);
  names_.push_back(name);
  return index_.emplace(name, Var(std::move(init), true)).first->second;
}

Var& ParameterStore::add_normal(const std::string& name, Eigen::Index rows, Eigen::Index cols, double std,
                                Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = std * rng.normal();
  }
  return add(name, std::move(m));
}

Var& ParameterStore::add_zeros(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  return add(name, Matrix::Zero(rows, cols));
}

Var& ParameterStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ValidationError("unknown parameter " + name);
  return it->second;
}

const Var& ParameterStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ValidationError("unknown parameter " + name);
  return it->second;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, v] : index_) n += static_cast<std::size_t>(v.value().size());
  return n;
}

void ParameterStore::set_frozen(const std::string& name, bool frozen) {
  at(name).set_requires_grad(!frozen);
  if (frozen) {
    frozen_.insert(name);
    at(name).zero_grad();
  } else {
    frozen_.erase(name);
  }
}

bool ParameterStore::frozen(const std::string& name) const { return frozen_.count(name) != 0; }

void ParameterStore::zero_grad() {
  for (auto& [name, v] : index_) v.zero_grad();
}

std::string ParameterStore::hash(const std::vector<std::string>& subset) const {
  Sha256 h;
  for (const auto& name : subset.empty() ? names_ : subset) {
    const Matrix& m = at(name).value();
    h.update(name + ":" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ";");
    h.update(std::as_bytes(std::span<const double>(m.data(), static_cast<std::size_t>(m.size()))));
  }
  return h.hex();
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t& pos, const std::string& origin) {
  if (pos + 4 > in.size()) throw IoError(origin + ": truncated parameter blob");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[pos + i]) << (8 * i);
  pos += 4;
  return v;
}

}  // namespace

std::vector<std::uint8_t> ParameterStore::serialize() const {
  std::vector<std::uint8_t> out = {'P', '2', 'M', 'P'};
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(names_.size()));
  for (const auto& name : names_) {
    const Matrix& m = at(name).value();
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    const auto* bytes = reinterpret_cast<const std::uint8_t*>(m.data());
    out.insert(out.end(), bytes, bytes + m.size() * sizeof(double));
  }
  return out;
}

void ParameterStore::deserialize(const std::vector<std::uint8_t>& blob, const std::string& origin) {
  if (blob.size() < 12 || std::memcmp(blob.data(), "P2MP", 4) != 0) {
    throw IoError(origin + ": not a parameter blob");
  }
  std::size_t pos = 4;
  if (get_u32(blob, pos, origin) != 1) throw IoError(origin + ": unsupported parameter blob version");
  const std::uint32_t count = get_u32(blob, pos, origin);
  if (count != names_.size()) {
    throw IoError(origin + ": blob has " + std::to_string(count) + " parameters, model expects " +
                  std::to_string(names_.size()));
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t len = get_u32(blob, pos, origin);
    if (pos + len > blob.size()) throw IoError(origin + ": truncated parameter blob");
    std::string name(blob.begin() + static_cast<std::ptrdiff_t>(pos),
                     blob.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
    const std::uint32_t rows = get_u32(blob, pos, origin);
    const std::uint32_t cols = get_u32(blob, pos, origin);
    if (!contains(name)) throw IoError(origin + ": unexpected parameter " + name);
    Matrix& m = at(name).mutable_value();
    if (m.rows() != rows || m.cols() != cols) throw IoError(origin + ": shape mismatch for " + name);
    const std::size_t bytes = static_cast<std::size_t>(rows) * cols * sizeof(double);
    if (pos + bytes > blob.size()) throw IoError(origin + ": truncated parameter blob");
    std::memcpy(m.data(), blob.data() + pos, bytes);
    pos += bytes;
  }
}

void ParameterStore::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto blob = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
}

void ParameterStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint blob " + path.string());
  std::vector<std::uint8_t> blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  deserialize(blob, path.string());
}

Linear::Linear(ParameterStore& store, const std::string& prefix, Eigen::Index in, Eigen::Index out, double std,
               Rng& rng)
    : weight(prefix + ".weight"), bias(prefix + ".bias") {
  store.add_normal(weight, in, out, std, rng);
  store.add_zeros(bias, 1, out);
}

Var Linear::operator()(const ParameterStore& store, const Var& x) const {
  return add_row(matmul(x, store.at(weight)), store.at(bias));
}

namespace {
Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = (2.0 * rng.uniform() - 1.0) * bound;
  }
  return m;
}
}  // namespace

GruDirection::GruDirection(ParameterStore& store, const std::string& prefix, Eigen::Index in, Eigen::Index h,
                           Rng& rng)
    : w_input(prefix + ".w_input"),
      b_input(prefix + ".b_input"),
      w_hidden(prefix + ".w_hidden"),
      b_hidden(prefix + ".b_hidden"),
      hidden(h) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(h));
  store.add(w_input, uniform_matrix(in, 3 * h, bound, rng));
  store.add(b_input, uniform_matrix(1, 3 * h, bound, rng));
  store.add(w_hidden, uniform_matrix(h, 3 * h, bound, rng));
  store.add(b_hidden, uniform_matrix(1, 3 * h, bound, rng));
}

Var GruDirection::operator()(const ParameterStore& store, const Var& x, bool reverse) const {
  const Eigen::Index steps = x.rows();
  const Eigen::Index h = hidden;
  const Var gx_all = add_row(matmul(x, store.at(w_input)), store.at(b_input));
  const Var& wh = store.at(w_hidden);
  const Var& bh = store.at(b_hidden);
  Var state = constant(Matrix::Zero(1, h));
  std::vector<Var> outputs(static_cast<std::size_t>(steps));
  for (Eigen::Index s = 0; s < steps; ++s) {
    const Eigen::Index t = reverse ? steps - 1 - s : s;
    const Var gx = row(gx_all, t);
    const Var gh = add_row(matmul(state, wh), bh);
    const Var r = sigmoid(add(cols(gx, 0, h), cols(gh, 0, h)));
    const Var z = sigmoid(add(cols(gx, h, h), cols(gh, h, h)));
    const Var n = tanh(add(cols(gx, 2 * h, h), mul(r, cols(gh, 2 * h, h))));
    // h_t = (1 - z) * n + z * h_{t-1} = n + z * (h_{t-1} - n)
    state = add(n, mul(z, sub(state, n)));
    outputs[static_cast<std::size_t>(t)] = state;
  }
  return vcat(outputs);
}

BiGru::BiGru(ParameterStore& store, const std::string& prefix, Eigen::Index in, Eigen::Index hidden, Rng& rng)
    : forward(store, prefix + ".fwd", in, hidden, rng), backward(store, prefix + ".bwd", in, hidden, rng) {}

Var BiGru::operator()(const ParameterStore& store, const Var& x) const {
  return hcat({forward(store, x, false), backward(store, x, true)});
}

MultiHeadAttention::MultiHeadAttention(ParameterStore& store, const std::string& prefix, Eigen::Index d, int h,
                                       double std, Rng& rng)
    : q(store, prefix + ".q", d, d, std, rng),
      k(store, prefix + ".k", d, d, std, rng),
      v(store, prefix + ".v", d, d, std, rng),
      o(store, prefix + ".o", d, d, std, rng),
      dim(d),
      heads(h) {
  if (h <= 0 || d % h != 0) {
    throw ValidationError("attention dim " + std::to_string(d) + " is not divisible by " + std::to_string(h) +
                          " heads");
  }
}

Var MultiHeadAttention::operator()(const ParameterStore& store, const Var& queries, const Var& memory,
                                   bool causal) const {
  const Var qm = q(store, queries);
  const Var km = k(store, memory);
  const Var vm = v(store, memory);
  const Eigen::Index dh = dim / heads;
  const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> outs;
  outs.reserve(static_cast<std::size_t>(heads));
  for (int hd = 0; hd < heads; ++hd) {
    const Var qh = cols(qm, hd * dh, dh);
    const Var kh = cols(km, hd * dh, dh);
    const Var vh = cols(vm, hd * dh, dh);
    const Var attn = softmax_rows(scale(matmul(qh, transpose(kh)), inv), causal);
    outs.push_back(matmul(attn, vh));
  }
  return o(store, heads == 1 ? outs.front() : hcat(outs));
}

}  // namespace p2m::nn
