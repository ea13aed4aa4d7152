#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace p2m::nn {

using Matrix = Eigen::MatrixXd;

struct Node {
  Matrix value;
  Matrix grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  void accumulate(const Matrix& delta);
};

/// Handle to a node in the computation graph. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(Matrix value, bool requires_grad = false);

  [[nodiscard]] const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  [[nodiscard]] const Matrix& grad() const { return node_->grad; }
  [[nodiscard]] bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  void zero_grad() { node_->grad.resize(0, 0); }
  [[nodiscard]] Eigen::Index rows() const { return node_->value.rows(); }
  [[nodiscard]] Eigen::Index cols() const { return node_->value.cols(); }
  [[nodiscard]] double scalar() const { return node_->value(0, 0); }
  [[nodiscard]] bool defined() const { return node_ != nullptr; }

  [[nodiscard]] const std::shared_ptr<Node>& node() const { return node_; }

  /// Creates a result node; the backward closure is kept only when some
  /// parent requires a gradient.
  static Var make(Matrix value, std::vector<Var> parents, std::function<void(Node&)> backward);

 private:
  std::shared_ptr<Node> node_;
};

/// Back-propagates from a 1x1 loss. Gradients accumulate into every node that
/// requires them (typically parameters); call zero_grad between steps.
void backward(const Var& loss, double seed = 1.0);

Var constant(Matrix value);

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var add_row(const Var& a, const Var& row);  // broadcast a 1xN row over every row of a
Var scale(const Var& a, double s);
Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var relu(const Var& a);
Var transpose(const Var& a);
/// Row-wise softmax; when `causal`, entry (i, j) with j > i is masked out.
Var softmax_rows(const Var& a, bool causal = false);
Var row(const Var& a, Eigen::Index i);
Var cols(const Var& a, Eigen::Index start, Eigen::Index count);
Var hcat(const std::vector<Var>& parts);
Var vcat(const std::vector<Var>& parts);
Var mean_rows(const Var& a);  // -> 1 x cols
/// Elementwise product with a fixed mask (inverted dropout passes mask / keep).
Var apply_mask(const Var& a, const Matrix& mask);
/// Mean over rows with weight > 0 of (logsumexp(row) - row[target]), each
/// weighted. Returns 1x1.
Var cross_entropy(const Var& logits, std::span<const int> targets, std::span<const double> weights = {});

}  // namespace p2m::nn
