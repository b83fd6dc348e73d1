#include <doctest.h>

#include <cmath>
#include <sstream>

#include "evae/errors.hpp"
#include "evae/graph.hpp"
#include "evae/param_store.hpp"
#include "evae/rng.hpp"
#include "evae/tensor.hpp"
#include "helpers.hpp"

using namespace evae;
using evae::test::max_gradient_error;
using evae::test::random_tensor;

namespace {

// Two (3, 4) parameters, a (4, 2) weight and a (1, 2) bias.
ParamStore small_store(std::uint64_t seed) {
  Rng rng(seed);
  ParamStore ps;
  ps.add("a", random_tensor({3, 4}, rng));
  ps.add("b", random_tensor({3, 4}, rng));
  ps.add("w", random_tensor({4, 2}, rng));
  ps.add("r", random_tensor({1, 2}, rng));
  return ps;
}

}  // namespace

TEST_CASE("tensor shape bookkeeping") {
  Tensor m = Tensor::matrix(2, 3, 1.5);
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m.size() == 6);
  CHECK(m.at(1, 2) == 1.5);
  CHECK(Tensor::scalar(4.0).item() == 4.0);
  CHECK(Tensor::row({1, 2, 3}).rows() == 1);
  CHECK_THROWS(Tensor({2, 2}, std::vector<double>{1, 2, 3}));
  CHECK_THROWS(m.item());
  m.at(0, 0) = std::nan("");
  CHECK_FALSE(m.all_finite());
}

TEST_CASE("every tape operation matches central differences") {
  using Op = std::function<Var(Graph&)>;
  const std::vector<std::pair<const char*, Op>> cases{
      {"matmul", [](Graph& g) { return g.sum(g.matmul(g.param("a"), g.param("w"))); }},
      {"add_row",
       [](Graph& g) {
         return g.sum(g.square(g.add_row(g.matmul(g.param("a"), g.param("w")), g.param("r"))));
       }},
      {"add", [](Graph& g) { return g.sum(g.square(g.add(g.param("a"), g.param("b")))); }},
      {"sub", [](Graph& g) { return g.sum(g.square(g.sub(g.param("a"), g.param("b")))); }},
      {"mul", [](Graph& g) { return g.sum(g.mul(g.param("a"), g.param("b"))); }},
      {"scale", [](Graph& g) { return g.sum(g.square(g.scale(g.param("a"), -2.5))); }},
      {"add_scalar", [](Graph& g) { return g.sum(g.square(g.add_scalar(g.param("a"), 0.3))); }},
      {"relu", [](Graph& g) { return g.sum(g.mul(g.relu(g.param("a")), g.param("b"))); }},
      {"tanh", [](Graph& g) { return g.sum(g.mul(g.tanh(g.param("a")), g.param("b"))); }},
      {"sigmoid", [](Graph& g) { return g.sum(g.mul(g.sigmoid(g.param("a")), g.param("b"))); }},
      {"exp", [](Graph& g) { return g.sum(g.mul(g.exp(g.param("a")), g.param("b"))); }},
      {"slice_cols",
       [](Graph& g) { return g.sum(g.square(g.slice_cols(g.param("a"), 1, 2))); }},
      {"mean_rows",
       [](Graph& g) { return g.sum(g.square(g.mean_rows(g.mul(g.param("a"), g.param("b"))))); }},
      {"bernoulli_nll",
       [](Graph& g) {
         Tensor x = Tensor::matrix(3, 4);
         for (std::size_t i = 0; i < x.size(); ++i) x[i] = (i % 3 == 0) ? 1.0 : 0.0;
         return g.bernoulli_nll(g.scale(g.param("a"), 4.0), x);
       }},
      {"gaussian_nll",
       [](Graph& g) {
         Tensor x = Tensor::matrix(3, 4);
         for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.1 * static_cast<double>(i);
         return g.gaussian_nll(g.param("a"), x);
       }},
  };
  for (const auto& [name, op] : cases) {
    ParamStore ps = small_store(7);
    INFO(std::string(name));
    CHECK(max_gradient_error(ps, op) < 1e-6);
  }
}

TEST_CASE("a node used on two paths accumulates both gradients") {
  ParamStore ps = small_store(11);
  // x is used twice; both paths must add into the same gradient.
  auto op = [](Graph& g) {
    Var x = g.param("a");
    return g.sum(g.add(g.square(x), g.scale(x, 3.0)));
  };
  ps.zero_grad();
  Graph g(&ps);
  g.backward(op(g));
  const Tensor& a = ps.value("a");
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(ps.grad("a")[i] == doctest::Approx(2 * a[i] + 3));
}

TEST_CASE("bernoulli nll of zero logits is ln 2 per pixel") {
  Graph g;
  Tensor x = Tensor::matrix(2, 5);
  x[3] = 1.0;
  Var l = g.constant(Tensor::matrix(2, 5));
  CHECK(g.value(g.bernoulli_nll(l, x)).item() == doctest::Approx(5 * std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("bernoulli nll is stable for large logits") {
  Graph g;
  Tensor logits({1, 2}, std::vector<double>{800.0, -800.0});
  Tensor x({1, 2}, std::vector<double>{1.0, 0.0});
  CHECK(g.value(g.bernoulli_nll(g.constant(logits), x)).item() == doctest::Approx(0.0));
  Tensor wrong({1, 2}, std::vector<double>{0.0, 1.0});
  CHECK(g.value(g.bernoulli_nll(g.constant(logits), wrong)).item() == doctest::Approx(1600.0));
}

TEST_CASE("graph misuse is reported") {
  ParamStore ps = small_store(3);
  SUBCASE("backward twice") {
    Graph g(&ps);
    Var l = g.sum(g.param("a"));
    g.backward(l);
    CHECK_THROWS_AS(g.backward(l), UsageError);
  }
  SUBCASE("non-scalar loss") {
    Graph g(&ps);
    CHECK_THROWS_AS(g.backward(g.param("a")), UsageError);
  }
  SUBCASE("empty tape") {
    Graph g(&ps);
    CHECK_THROWS_AS(g.backward(Var{0}), UsageError);
  }
  SUBCASE("gradient before backward") {
    Graph g(&ps);
    Var l = g.sum(g.param("a"));
    CHECK_THROWS_AS(g.grad(l), UsageError);
  }
  SUBCASE("inference-only graph") {
    Graph g(static_cast<const ParamStore&>(ps));
    CHECK_THROWS_AS(g.backward(g.sum(g.param("a"))), UsageError);
  }
  SUBCASE("shape mismatch") {
    Graph g(&ps);
    CHECK_THROWS_AS(g.matmul(g.param("a"), g.param("b")), ConfigError);
    CHECK_THROWS_AS(g.add(g.param("a"), g.param("w")), ConfigError);
  }
  SUBCASE("non-finite value aborts") {
    Graph g;
    CHECK_THROWS_AS(g.exp(g.constant(Tensor::scalar(1000.0))), NumericError);
  }
}

TEST_CASE("gradients of constants are computed only when needed") {
  ParamStore ps = small_store(5);
  Graph g(&ps);
  Var c = g.constant(Tensor::matrix(2, 3, 1.0));
  Var l = g.sum(g.matmul(c, g.slice_cols(g.param("a"), 0, 3)));
  g.backward(l);
  // d/dA of sum(C A[:, :3]) is the column sums of C: 2 for the first three columns.
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t k = 0; k < 3; ++k) CHECK(ps.grad("a").at(r, k) == 2.0);
    CHECK(ps.grad("a").at(r, 3) == 0.0);
  }
}

TEST_CASE("adam first step moves each weight by lr * g / (|g| + eps)") {
  ParamStore ps;
  ps.add("x", Tensor({1, 3}, std::vector<double>{1.0, -2.0, 0.5}));
  auto& e = ps.entry(0);
  e.grad = Tensor({1, 3}, std::vector<double>{0.3, -4.0, 1e-3});
  AdamConfig cfg;
  adam_step(ps, cfg);
  const double g[] = {0.3, -4.0, 1e-3};
  const double x0[] = {1.0, -2.0, 0.5};
  for (int i = 0; i < 3; ++i) {
    CHECK(e.value[i] == doctest::Approx(x0[i] - cfg.lr * g[i] / (std::abs(g[i]) + cfg.eps))
                            .epsilon(1e-14));
  }
  CHECK(ps.step() == 1);
  AdamConfig bad;
  bad.lr = 0.0;
  CHECK_THROWS_AS(adam_step(ps, bad), ConfigError);
}

TEST_CASE("adam minimizes a quadratic") {
  ParamStore ps;
  ps.add("x", Tensor::row({3.0, -2.0}));
  AdamConfig cfg;
  cfg.lr = 0.05;
  for (int i = 0; i < 2000; ++i) {
    ps.zero_grad();
    Graph g(&ps);
    g.backward(g.sum(g.square(g.param("x"))));
    adam_step(ps, cfg);
  }
  CHECK(std::abs(ps.value("x")[0]) < 1e-3);
  CHECK(std::abs(ps.value("x")[1]) < 1e-3);
}

TEST_CASE("param store round trips bit-exactly") {
  ParamStore ps = small_store(9);
  ps.entry(1).m.fill(0.25);
  ps.entry(2).v.fill(1.0 / 3.0);
  ps.set_step(17);
  std::stringstream buf;
  ps.write(buf);
  ParamStore back = ParamStore::read(buf);
  CHECK(back == ps);
  CHECK(back.step() == 17);
  CHECK_THROWS_AS(ps.add("a", Tensor::scalar(0)), ConfigError);
  std::stringstream cut(buf.str().substr(0, 20));
  CHECK_THROWS_AS(ParamStore::read(cut), IntegrityError);
}

TEST_CASE("rng streams are reproducible and forks are independent of use") {
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
  const Rng f1 = a.fork(3);
  a.uniform();
  CHECK(a.fork(3) == f1);
  CHECK_FALSE(a.fork(3) == a.fork(4));

  Rng s(5);
  s.normal();
  Rng t;
  t.set_state(s.state());
  CHECK(t == s);
  CHECK(t.normal() == s.normal());
  CHECK_THROWS_AS(t.set_state("garbage"), IntegrityError);
}

TEST_CASE("rng distributions have the expected moments") {
  Rng r(1);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    su += u;
    const double z = r.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.01));
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 70000; ++i) ++hist[r.index(7)];
  for (int h : hist) CHECK(std::abs(h - 10000) < 500);
}
