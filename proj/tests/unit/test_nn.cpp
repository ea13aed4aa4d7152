#include <doctest.h>

#include <cmath>
#include <functional>

#include "p2m/core/error.hpp"
#include "p2m/core/rng.hpp"
#include "p2m/nn/autodiff.hpp"
#include "p2m/nn/optim.hpp"
#include "p2m/nn/parameters.hpp"
#include "support.hpp"

using namespace p2m;
using namespace p2m::nn;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

// Largest relative error between backprop and central differences over all inputs.
double gradient_error(std::vector<Var> inputs, const std::function<Var(const std::vector<Var>&)>& f) {
  for (auto& v : inputs) {
    v.set_requires_grad(true);
    v.zero_grad();
  }
  backward(f(inputs));
  double worst = 0.0;
  for (auto& v : inputs) {
    const Matrix analytic = v.grad().size() ? v.grad() : Matrix::Zero(v.rows(), v.cols());
    Matrix numeric(v.rows(), v.cols());
    for (Eigen::Index i = 0; i < v.value().size(); ++i) {
      const double keep = v.value().data()[i];
      v.mutable_value().data()[i] = keep + 1e-5;
      const double up = f(inputs).scalar();
      v.mutable_value().data()[i] = keep - 1e-5;
      const double down = f(inputs).scalar();
      v.mutable_value().data()[i] = keep;
      numeric.data()[i] = (up - down) / 2e-5;
    }
    const double denom = std::max({analytic.norm(), numeric.norm(), 1e-6});
    worst = std::max(worst, (analytic - numeric).norm() / denom);
  }
  return worst;
}

Var sum_all(const Var& x) {
  return matmul(matmul(constant(Matrix::Ones(1, x.rows())), x), constant(Matrix::Ones(x.cols(), 1)));
}

}  // namespace

TEST_CASE("elementwise and matrix op gradients") {
  Rng rng(1);
  const Matrix w = random_matrix(3, 4, rng);
  auto f = [&](const std::vector<Var>& in) {
    Var h = tanh(add_row(matmul(in[0], in[1]), in[2]));
    Var g = mul(sigmoid(h), relu(scale(h, 1.7)));
    return sum_all(mul(sub(g, transpose(transpose(h))), constant(w)));
  };
  CHECK(gradient_error({Var(random_matrix(3, 5, rng)), Var(random_matrix(5, 4, rng)), Var(random_matrix(1, 4, rng))},
                       f) < 1e-6);
}

TEST_CASE("softmax, slicing and concatenation gradients") {
  Rng rng(2);
  const Matrix w = random_matrix(5, 3, rng);
  auto f = [&](const std::vector<Var>& in) {
    Var s = softmax_rows(in[0], true);                   // 3 x 3
    Var top = hcat({cols(s, 0, 2), cols(s, 2, 1)});
    Var stacked = vcat({top, cols(in[1], 0, 3), softmax_rows(row(in[0], 0))});  // 3 + 1 + 1 rows
    return sum_all(mul(stacked, constant(w)));
  };
  CHECK(gradient_error({Var(random_matrix(3, 3, rng)), Var(random_matrix(1, 4, rng))}, f) < 1e-6);
  auto g = [](const std::vector<Var>& in) { return sum_all(mean_rows(mul(in[0], in[0]))); };
  CHECK(gradient_error({Var(random_matrix(4, 2, rng))}, g) < 1e-6);
}

TEST_CASE("causal softmax masks the future") {
  const Var s = softmax_rows(constant(Matrix::Zero(3, 3)), true);
  CHECK(s.value()(0, 1) == 0.0);
  CHECK(s.value()(0, 0) == doctest::Approx(1.0));
  CHECK(s.value()(2, 1) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("cross entropy value and gradient") {
  Matrix logits(2, 3);
  logits << 1.0, 2.0, 3.0, 0.0, 0.0, 0.0;
  const std::vector<int> targets = {2, 1};
  const double l0 = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0)) - 3.0;
  const double l1 = std::log(3.0);
  CHECK(cross_entropy(constant(logits), targets).scalar() == doctest::Approx((l0 + l1) / 2.0));
  const std::vector<double> weights = {0.0, 1.0};
  CHECK(cross_entropy(constant(logits), targets, weights).scalar() == doctest::Approx(l1));
  Rng rng(3);
  CHECK(gradient_error({Var(random_matrix(4, 6, rng))}, [](const auto& in) {
          static const std::vector<int> t = {0, 5, 2, 2};
          static const std::vector<double> w = {1.0, 0.5, 0.0, 2.0};
          return cross_entropy(in[0], t, w);
        }) < 1e-6);
}

TEST_CASE("layer gradients: GRU and attention") {
  Rng rng(4);
  ParameterStore store;
  BiGru gru(store, "gru", 3, 2, rng);
  MultiHeadAttention mha(store, "att", 4, 2, 0.5, rng);
  const Matrix x = random_matrix(5, 3, rng);
  store.zero_grad();
  auto loss = [&] { return sum_all(mha(store, gru(store, constant(x)), gru(store, constant(x)), true)); };
  backward(loss());
  double worst = 0.0;
  for (const auto& name : store.names()) {
    auto& p = store.at(name);
    const Matrix analytic = p.grad();
    Matrix numeric(p.rows(), p.cols());
    for (Eigen::Index i = 0; i < p.value().size(); ++i) {
      const double keep = p.value().data()[i];
      p.mutable_value().data()[i] = keep + 1e-5;
      const double up = loss().scalar();
      p.mutable_value().data()[i] = keep - 1e-5;
      const double down = loss().scalar();
      p.mutable_value().data()[i] = keep;
      numeric.data()[i] = (up - down) / 2e-5;
    }
    worst = std::max(worst, (analytic - numeric).norm() / std::max({analytic.norm(), numeric.norm(), 1e-6}));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("cosine schedule with warmup") {
  CHECK(cosine_with_warmup(1.0, 1, 4, 20) == doctest::Approx(0.25));
  CHECK(cosine_with_warmup(1.0, 4, 4, 20) == doctest::Approx(1.0));
  CHECK(cosine_with_warmup(1.0, 12, 4, 20) == doctest::Approx(0.5));
  CHECK(cosine_with_warmup(1.0, 20, 4, 20) == doctest::Approx(0.0));
}

TEST_CASE("AdamW skips frozen parameters and decays weights") {
  Rng rng(5);
  ParameterStore store;
  store.add_normal("a", 2, 2, 1.0, rng);
  store.add_normal("b", 2, 2, 1.0, rng);
  store.set_frozen("b", true);
  const auto hash_b = store.hash({"b"});
  const Matrix a0 = store.at("a").value();
  backward(add(sum_all(store.at("a")), sum_all(store.at("b"))));
  AdamW opt({0.9, 0.999, 1e-8, 0.0});
  opt.step(store, 0.1);
  CHECK(store.hash({"b"}) == hash_b);
  // First Adam step moves every coordinate by lr against the gradient sign.
  CHECK((store.at("a").value() - (a0.array() - 0.1).matrix()).norm() < 1e-6);

  ParameterStore decay;
  decay.add("w", Matrix::Constant(1, 1, 2.0));
  backward(scale(sum_all(decay.at("w")), 0.0));
  AdamW wd({0.9, 0.999, 1e-8, 0.5});
  wd.step(decay, 0.1);
  CHECK(decay.at("w").value()(0, 0) == doctest::Approx(2.0 - 0.1 * 0.5 * 2.0));
}

TEST_CASE("parameter store serialisation and hashing") {
  Rng rng(6);
  ParameterStore a;
  a.add_normal("x", 3, 2, 1.0, rng);
  a.add_zeros("y", 1, 4);
  CHECK(a.scalar_count() == 10);
  CHECK_THROWS_AS(a.add_zeros("x", 1, 1), ValidationError);
  ParameterStore b;
  b.add_zeros("x", 3, 2);
  b.add_zeros("y", 1, 4);
  CHECK(a.hash() != b.hash());
  b.deserialize(a.serialize());
  CHECK(a.hash() == b.hash());
  CHECK(a.hash({"y"}) == b.hash({"y"}));
  ParameterStore c;
  c.add_zeros("x", 2, 3);
  c.add_zeros("y", 1, 4);
  CHECK_THROWS(c.deserialize(a.serialize()));
  p2m::testing::TempDir tmp;
  a.save(tmp / "p.bin");
  b.at("x").mutable_value().setZero();
  b.load(tmp / "p.bin");
  CHECK(b.hash() == a.hash());
}
