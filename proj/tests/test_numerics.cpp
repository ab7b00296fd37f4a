#include <cmath>

#include "doctest.h"
#include "dualabsa/numerics.hpp"
#include "support/fd_oracle.hpp"

using namespace dualabsa;
using dualabsa::testing::fd_compare;
using dualabsa::testing::random_projection;
using dualabsa::testing::random_tensor;
using Mat = MatrixX<double>;

namespace {

Tensor<double> mat(std::initializer_list<std::initializer_list<double>> rows) {
  Mat m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
  Index r = 0;
  for (auto row : rows) {
    Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return Tensor<double>::from_matrix(m);
}

}  // namespace

TEST_CASE("matmul: identity and selector cases") {
  Graph<double> g;
  auto eye = g.constant(mat({{1, 0}, {0, 1}}));
  auto b = g.constant(mat({{1, 2}, {3, 4}}));
  CHECK(matmul(eye, b).mat() == b.mat());

  auto row = g.constant(mat({{1, 0}}));
  auto col = g.constant(mat({{2}, {3}}));
  auto out = matmul(row, col);
  CHECK(out.shape() == Shape{1, 1});
  CHECK(out.mat()(0, 0) == 2.0);
}

TEST_CASE("matmul: shape mismatch names both shapes") {
  Graph<double> g;
  auto a = g.constant(Tensor<double>(Shape{2, 3}));
  auto b = g.constant(Tensor<double>(Shape{2, 3}));
  try {
    matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string what = e.what();
    CHECK(what.find("[2x3]") != std::string::npos);
    CHECK(what.find(" x [2x3]") != std::string::npos);
  }
}

TEST_CASE("matmul: gradients match central differences") {
  Rng rng(7);
  ParamStore<double> store;
  store.add("a", random_tensor({3, 4}, rng));
  store.add("b", random_tensor({4, 2}, rng));
  auto r = fd_compare(
      [&](Graph<double>& g) { return random_projection(matmul(g.parameter(store, "a"), g.parameter(store, "b")), 11); },
      store);
  CHECK(r.max_rel_error <= 1e-6);
}

TEST_CASE("softmax: symmetry, stability and direct evaluation") {
  Graph<double> g;
  auto half = softmax(g.constant(Tensor<double>::vector({0, 0})));
  CHECK(half.mat()(0, 0) == doctest::Approx(0.5));
  CHECK(half.mat()(0, 1) == doctest::Approx(0.5));

  auto big = softmax(g.constant(Tensor<double>::vector({1000, 0})));
  CHECK(std::abs(big.mat()(0, 0) - 1.0) <= 1e-12);
  CHECK(std::abs(big.mat()(0, 1)) <= 1e-12);
  CHECK(big.value().all_finite());

  auto three = softmax(g.constant(Tensor<double>::vector({1, 2, 3})));
  long double total = std::exp(1.0L) + std::exp(2.0L) + std::exp(3.0L);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(three.mat()(0, i) - double(std::exp(1.0L + i) / total)) <= 1e-15);
}

TEST_CASE("softmax: rows are distributions for random finite input (property)") {
  Rng rng(123);
  for (int trial = 0; trial < 200; ++trial) {
    const Index rows = 1 + static_cast<Index>(rng.below(6));
    const Index cols = 1 + static_cast<Index>(rng.below(9));
    Graph<double> g;
    auto y = softmax(g.constant(random_tensor({rows, cols}, rng, 50.0)));
    for (Index r = 0; r < rows; ++r) {
      CHECK(std::abs(y.mat().row(r).sum() - 1.0) <= 1e-9);
      CHECK(y.mat().row(r).minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("softmax: masked columns get zero weight") {
  Graph<double> g;
  auto y = softmax(g.constant(mat({{1, 5, 2}, {0, 0, 0}})), {true, false, true});
  CHECK(y.mat()(0, 1) == 0.0);
  CHECK(y.mat()(1, 1) == 0.0);
  CHECK(std::abs(y.mat().row(0).sum() - 1.0) <= 1e-12);
  CHECK(y.mat()(1, 0) == doctest::Approx(0.5));
}

TEST_CASE("layer_norm: closed-form cases") {
  Graph<double> g;
  auto gain = g.constant(Tensor<double>::vector({1, 1}));
  auto bias = g.constant(Tensor<double>::vector({0, 0}));
  auto y = layer_norm(g.constant(Tensor<double>::vector({1, 3})), gain, bias, 1e-12);
  CHECK(y.mat()(0, 0) == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(y.mat()(0, 1) == doctest::Approx(1.0).epsilon(1e-9));

  auto gain3 = g.constant(Tensor<double>::vector({1, 1, 1}));
  auto bias3 = g.constant(Tensor<double>::vector({0, 0, 0}));
  auto flat = layer_norm(g.constant(Tensor<double>::vector({5, 5, 5})), gain3, bias3, 1e-5);
  CHECK(flat.mat().cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("layer_norm: normalised output has zero mean and unit variance (property)") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Index d = 2 + static_cast<Index>(rng.below(30));
    Graph<double> g;
    Tensor<double> ones(Shape{d});
    ones.matrix().setOnes();
    auto x = random_tensor({3, d}, rng, 10.0);
    auto y = layer_norm(g.constant(x), g.constant(ones), g.constant(Tensor<double>(Shape{d})), 1e-5);
    for (Index r = 0; r < 3; ++r) {
      const double in_mean = x.matrix().row(r).mean();
      if ((x.matrix().row(r).array() - in_mean).square().mean() < 1e4 * 1e-5) continue;  // needs variance >> eps
      const double mean = y.mat().row(r).mean();
      const double var = (y.mat().row(r).array() - mean).square().mean();
      CHECK(std::abs(mean) <= 1e-6);
      CHECK(std::abs(var - 1.0) <= 1e-3);
    }
  }
}

TEST_CASE("layer_norm: gradients match central differences") {
  Rng rng(17);
  ParamStore<double> store;
  store.add("x", random_tensor({1, 8}, rng));
  store.add("gain", random_tensor({8}, rng));
  store.add("bias", random_tensor({8}, rng));
  auto r = fd_compare(
      [&](Graph<double>& g) {
        return random_projection(
            layer_norm(g.parameter(store, "x"), g.parameter(store, "gain"), g.parameter(store, "bias"), 1e-5), 3);
      },
      store);
  CHECK(r.max_rel_error <= 1e-5);
}

TEST_CASE("elementwise ops") {
  Graph<double> g;
  auto r = relu(g.constant(Tensor<double>::vector({-1, 0, 2})));
  CHECK(r.mat()(0, 0) == 0.0);
  CHECK(r.mat()(0, 1) == 0.0);
  CHECK(r.mat()(0, 2) == 2.0);
  CHECK(sigmoid(g.constant(Tensor<double>::vector({0}))).mat()(0, 0) == 0.5);
  CHECK(tanh(g.constant(Tensor<double>::vector({0}))).mat()(0, 0) == 0.0);

  auto a = g.constant(Tensor<double>(Shape{2, 3}));
  auto b = g.constant(Tensor<double>(Shape{3, 3}));
  CHECK_THROWS_AS(concat<double>({a, b}), DimensionError);
  CHECK(concat<double>({a, a}).shape() == Shape{2, 6});
}

TEST_CASE("dropout: eval identity, inverted scaling and expectation") {
  Graph<double> g(false, Rng(1));
  auto x = g.constant(Tensor<double>::vector({1.5, -2.0, 3.0}));
  auto same = dropout(x, 0.5, false);
  CHECK(same == x);
  CHECK_FALSE(g.stochastic());

  Graph<double> train(true, Rng(99));
  auto one = train.constant(Tensor<double>::vector({1.0}));
  double total = 0;
  const int trials = 100000;
  for (int t = 0; t < trials; ++t) {
    double v = dropout(one, 0.5, true).mat()(0, 0);
    CHECK((v == 0.0 || v == 2.0));
    total += v;
  }
  const double mean = total / trials;
  CHECK(mean >= 0.98);
  CHECK(mean <= 1.02);
  CHECK(train.stochastic());
  CHECK_THROWS_AS(dropout(one, 1.0, true), ConfigError);
}

TEST_CASE("cross_entropy: closed forms and direct evaluation") {
  Graph<double> g;
  CHECK(cross_entropy(g.constant(Tensor<double>::vector({1e6, -1e6})), 0).value().item() == doctest::Approx(0.0));
  CHECK(cross_entropy(g.constant(Tensor<double>::vector({0, 0})), 1).value().item() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    auto logits = random_tensor({5}, rng, 4.0);
    const int gold = static_cast<int>(rng.below(5));
    long double total = 0;
    for (double z : logits.values()) total += std::exp(static_cast<long double>(z));
    const double expected = static_cast<double>(-std::log(std::exp(static_cast<long double>(logits.values()[gold])) / total));
    CHECK(std::abs(cross_entropy(g.constant(logits), gold).value().item() - expected) <= 1e-10);
  }
  CHECK_THROWS_AS(cross_entropy(g.constant(Tensor<double>::vector({0, 0})), 2), LabelError);
  CHECK_THROWS_AS(cross_entropy(g.constant(Tensor<double>::vector({0, 0})), -1 - 1), LabelError);
}

TEST_CASE("every op: analytic gradient matches central differences (property, fixed seeds)") {
  using Builder = std::function<Var<double>(Graph<double>&, ParamStore<double>&)>;
  struct Case {
    const char* name;
    Builder build;
  };
  auto p = [](Graph<double>& g, ParamStore<double>& s, const char* n) { return g.parameter(s, n); };
  const std::vector<Case> cases = {
      {"matmul", [&](auto& g, auto& s) { return matmul(p(g, s, "a"), p(g, s, "w")); }},
      {"matmul_nt", [&](auto& g, auto& s) { return matmul_nt(p(g, s, "a"), p(g, s, "c")); }},
      {"add", [&](auto& g, auto& s) { return add(p(g, s, "a"), p(g, s, "c")); }},
      {"add_bias", [&](auto& g, auto& s) { return add_bias(p(g, s, "a"), p(g, s, "bias")); }},
      {"mul", [&](auto& g, auto& s) { return mul(p(g, s, "a"), p(g, s, "c")); }},
      {"scale", [&](auto& g, auto& s) { return scale(p(g, s, "a"), 2.5); }},
      {"relu", [&](auto& g, auto& s) { return relu(p(g, s, "a")); }},
      {"tanh", [&](auto& g, auto& s) { return tanh(p(g, s, "a")); }},
      {"sigmoid", [&](auto& g, auto& s) { return sigmoid(p(g, s, "a")); }},
      {"concat", [&](auto& g, auto& s) { return concat<double>({p(g, s, "a"), p(g, s, "c"), p(g, s, "a")}); }},
      {"slice_cols", [&](auto& g, auto& s) { return slice_cols(p(g, s, "a"), 1, 2); }},
      {"gather_rows", [&](auto& g, auto& s) { return gather_rows(p(g, s, "a"), {2, 0, 2, 3}); }},
      {"select_rows", [&](auto& g, auto& s) { return select_rows(p(g, s, "a"), p(g, s, "c"), {true, false, false, true}); }},
      {"softmax", [&](auto& g, auto& s) { return softmax(p(g, s, "a")); }},
      {"softmax_masked", [&](auto& g, auto& s) { return softmax(p(g, s, "a"), {true, false, true}); }},
      {"cross_entropy", [&](auto& g, auto& s) { return cross_entropy(p(g, s, "a"), {0, -1, 2, 1}, {1.0, 1.0, 0.5, 2.0}); }},
      {"layer_norm", [&](auto& g, auto& s) { return layer_norm(p(g, s, "a"), p(g, s, "bias"), p(g, s, "bias2"), 1e-5); }},
      {"sum", [&](auto& g, auto& s) { return sum(p(g, s, "a")); }},
      {"outer_sum", [&](auto& g, auto& s) { return outer_sum(p(g, s, "a"), p(g, s, "c")); }},
      {"row_max_upper", [&](auto& g, auto& s) { return row_max_upper(outer_sum(p(g, s, "a"), p(g, s, "c"))); }},
  };
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (const auto& c : cases) {
      Rng rng(seed * 1000 + 17);
      ParamStore<double> store;
      store.add("a", random_tensor({4, 3}, rng));
      store.add("c", random_tensor({4, 3}, rng));
      store.add("w", random_tensor({3, 5}, rng));
      store.add("bias", random_tensor({3}, rng));
      store.add("bias2", random_tensor({3}, rng));
      auto r = fd_compare([&](Graph<double>& g) { return random_projection(c.build(g, store), seed); }, store);
      INFO(c.name << " seed " << seed << " worst " << r.worst);
      CHECK(r.max_rel_error <= 1e-4);
    }
  }
}

TEST_CASE("grad_check: closed form, precondition and non-finite loss") {
  ParamStore<double> store;
  store.add("theta", Tensor<double>::vector({3.0}));
  auto square = [&](Graph<double>& g) {
    auto t = g.parameter(store, "theta");
    return sum(mul(t, t));
  };
  auto report = grad_check(square, store, 1e-5, 1e-6);
  CHECK(report.passed);
  CHECK(report.worst_analytic == doctest::Approx(6.0));
  CHECK(std::abs(report.worst_numeric - 6.0) <= 1e-6);

  auto noisy = [&](Graph<double>& g) { return sum(dropout(g.parameter(store, "theta"), 0.5, true)); };
  CHECK_THROWS_AS(grad_check(noisy, store, 1e-5, 1e-4), std::invalid_argument);

  auto blowup = [&](Graph<double>& g) {
    auto t = g.parameter(store, "theta");
    return sum(scale(t, std::numeric_limits<double>::infinity()));
  };
  CHECK_THROWS_AS(grad_check(blowup, store, 1e-5, 1e-4), NumericError);
  CHECK_THROWS_AS(grad_check(square, store, 0.0, 1e-4), std::invalid_argument);
}

TEST_CASE("grad_check: a kink inside the stencil is judged one-sided, wrong gradients still fail") {
  ParamStore<double> store;
  store.add("theta", Tensor<double>::vector({5e-6}));
  auto hinge = [&](Graph<double>& g) { return sum(relu(g.parameter(store, "theta"))); };
  const auto kinked = grad_check(hinge, store, 1e-5, 1e-6);
  CHECK(kinked.passed);
  CHECK(kinked.kink_elements == 1);

  // Identity forward with a doubled backward: no difference quotient agrees.
  auto wrong = [&](Graph<double>& g) {
    auto t = g.parameter(store, "theta");
    auto doubled = g.record("doubled", t.value(), {t}, [id = t.id](Graph<double>& gr, int self) { gr.grad(id) += 2.0 * gr.grad(self); });
    return sum(relu(doubled));
  };
  store.value("theta").values()[0] = 0.5;
  const auto bad = grad_check(wrong, store, 1e-5, 1e-4);
  CHECK_FALSE(bad.passed);
  CHECK(bad.max_rel_error == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("forward evaluation is bitwise deterministic") {
  auto run = [] {
    Rng rng(2024);
    Graph<double> g(true, Rng(5));
    auto x = g.constant(random_tensor({5, 6}, rng));
    auto w = g.constant(random_tensor({6, 6}, rng));
    auto y = dropout(softmax(matmul(x, w)), 0.3, true);
    return y.value().matrix();
  };
  Mat a = run();
  Mat b = run();
  CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
}

TEST_CASE("param store: frozen parameters receive no gradient") {
  ParamStore<double> store;
  store.add("frozen", Tensor<double>::vector({1, 2}), false);
  store.add("live", Tensor<double>::vector({3, 4}));
  Graph<double> g;
  g.backward(sum(add(g.parameter(store, "frozen"), g.parameter(store, "live"))));
  CHECK(store.grad("frozen").matrix().isZero());
  CHECK(store.grad("live").matrix().isOnes());
  CHECK_THROWS_AS(store.add("live", Tensor<double>::vector({1})), ConfigError);
}
