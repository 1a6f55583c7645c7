#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "modnet/errors.hpp"
#include "modnet/params.hpp"
#include "modnet/tape.hpp"
#include "oracles.hpp"

using namespace modnet;

namespace {

Tensor grad_of(const Gradients& g, const Tape& t, int node) {
  REQUIRE(g.reached[static_cast<std::size_t>(node)]);
  (void)t;
  return g.by_node[static_cast<std::size_t>(node)];
}

}  // namespace

TEST_CASE("tensor shape accessors and equality") {
  Tensor s = Tensor::scalar(3.5);
  CHECK(s.is_scalar());
  CHECK(s.rank() == 0);
  CHECK(s.item() == 3.5);

  Tensor v = Tensor::vec({1.0, 2.0, 3.0});
  CHECK(v.rank() == 1);
  CHECK(v.size() == 3);
  CHECK(v.at(2) == 3.0);

  Tensor m = Tensor::mat(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(m.rank() == 2);
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m.at(1, 2) == 6.0);
  CHECK(m == Tensor::mat(2, 3, {1, 2, 3, 4, 5, 6}));
  CHECK_FALSE(m == Tensor::mat(3, 2, {1, 2, 3, 4, 5, 6}));
  CHECK(Tensor::zeros_like(m) == Tensor::mat(2, 3, {0, 0, 0, 0, 0, 0}));
}

TEST_CASE("elementwise forward values") {
  Tape t;
  int a = t.constant(Tensor::vec({1.0, -2.0}));
  int b = t.constant(Tensor::vec({3.0, 5.0}));
  CHECK(t.val(t.add(a, b)) == Tensor::vec({4.0, 3.0}));
  CHECK(t.val(t.mul(a, b)) == Tensor::vec({3.0, -10.0}));
  CHECK(t.val(t.relu(a)) == Tensor::vec({1.0, 0.0}));
  CHECK(t.val(t.neg(a)) == Tensor::vec({-1.0, 2.0}));

  int sg = t.sigmoid(t.constant(Tensor::scalar(0.0)));
  CHECK(t.val(sg).item() == doctest::Approx(0.5).epsilon(1e-12));
  int th = t.tanh_(t.constant(Tensor::scalar(1.0)));
  CHECK(t.val(th).item() == doctest::Approx(std::tanh(1.0)).epsilon(1e-12));
  int lg = t.log_(t.constant(Tensor::scalar(std::exp(2.0))));
  CHECK(t.val(lg).item() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("matmul and matvec forward") {
  Tape t;
  int m = t.constant(Tensor::mat(2, 3, {1, 2, 3, 4, 5, 6}));
  int n = t.constant(Tensor::mat(3, 2, {7, 8, 9, 10, 11, 12}));
  CHECK(t.val(t.matmul(m, n)) == Tensor::mat(2, 2, {58, 64, 139, 154}));

  int x = t.constant(Tensor::vec({1.0, 0.0, -1.0}));
  CHECK(t.val(t.matvec(m, x)) == Tensor::vec({-2.0, -2.0}));
}

TEST_CASE("reductions forward") {
  Tape t;
  int m = t.constant(Tensor::mat(2, 3, {1, 2, 3, 4, 5, 6}));
  CHECK(t.val(t.col_sum(m)) == Tensor::vec({5.0, 7.0, 9.0}));
  CHECK(t.val(t.sum(m)).item() == 21.0);

  int v = t.constant(Tensor::vec({0.5, 3.0, -1.0}));
  CHECK(t.val(t.max_reduce(v)).item() == 3.0);
  CHECK(t.val(t.sum(v)).item() == 2.5);

  int c = t.concat({v, t.constant(Tensor::vec(std::vector<double>{9.0}))});
  CHECK(t.val(c) == Tensor::vec({0.5, 3.0, -1.0, 9.0}));
  CHECK(t.val(t.pick(c, 3)).item() == 9.0);
}

TEST_CASE("softmax forward matches oracle and is overflow safe") {
  Tape t;
  int v = t.constant(Tensor::vec({1.0, 2.0, 3.0}));
  const Tensor& p = t.val(t.softmax(v));
  oracle::Vec want = oracle::softmax({1.0, 2.0, 3.0});
  for (int i = 0; i < 3; ++i)
    CHECK(p.at(i) == doctest::Approx(want[static_cast<std::size_t>(i)]).epsilon(1e-12));

  // Max subtraction keeps huge logits finite.
  int big = t.softmax(t.constant(Tensor::vec({1000.0, 1001.0})));
  CHECK(t.val(big).all_finite());
  CHECK(t.val(big).at(1) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-12));
}

TEST_CASE("broadcast add and mul") {
  Tape t;
  int m = t.constant(Tensor::mat(2, 2, {1, 2, 3, 4}));
  int v = t.constant(Tensor::vec({10.0, 20.0}));
  int s = t.constant(Tensor::scalar(2.0));

  // length-d vector applies per column of a d-by-n matrix
  CHECK(t.val(t.add(m, v)) == Tensor::mat(2, 2, {11, 12, 23, 24}));
  CHECK(t.val(t.add(v, m)) == Tensor::mat(2, 2, {11, 12, 23, 24}));
  CHECK(t.val(t.mul(m, v)) == Tensor::mat(2, 2, {10, 20, 60, 80}));

  // scalar against anything
  CHECK(t.val(t.add(s, m)) == Tensor::mat(2, 2, {3, 4, 5, 6}));
  CHECK(t.val(t.mul(m, s)) == Tensor::mat(2, 2, {2, 4, 6, 8}));
  CHECK(t.val(t.mul(s, t.constant(Tensor::vec({1.0, -1.0})))) ==
        Tensor::vec({2.0, -2.0}));
}

TEST_CASE("shape errors") {
  Tape t;
  int v2 = t.constant(Tensor::vec({1.0, 2.0}));
  int v3 = t.constant(Tensor::vec({1.0, 2.0, 3.0}));
  int m23 = t.constant(Tensor::mat(2, 3, {1, 2, 3, 4, 5, 6}));

  CHECK_THROWS_AS(t.add(v2, v3), ShapeError);
  CHECK_THROWS_AS(t.mul(v2, v3), ShapeError);
  CHECK_THROWS_AS(t.add(m23, v3), ShapeError);  // vector must match rows
  CHECK_THROWS_AS(t.matmul(m23, m23), ShapeError);
  CHECK_THROWS_AS(t.matvec(m23, v2), ShapeError);
  CHECK_THROWS_AS(t.matvec(v2, v2), ShapeError);
  CHECK_THROWS_AS(t.softmax(m23), ShapeError);
  CHECK_THROWS_AS(t.max_reduce(m23), ShapeError);
  CHECK_THROWS_AS(t.col_sum(v2), ShapeError);
  CHECK_THROWS_AS(t.pick(v2, 2), ShapeError);
  CHECK_THROWS_AS(t.pick(v2, -1), ShapeError);
  CHECK_THROWS_AS(t.concat({}), ShapeError);
  CHECK_THROWS_AS(t.concat({m23}), ShapeError);
  CHECK_THROWS_AS(t.log_(t.constant(Tensor::scalar(0.0))), ShapeError);
  CHECK_THROWS_AS(t.log_(t.constant(Tensor::vec({1.0, -2.0}))), ShapeError);

  int root = t.add(v2, v2);
  CHECK_THROWS_AS(t.backward(root), ShapeError);  // non-scalar root
}

TEST_CASE("backward: d/dx sum(x*x) is 2x") {
  Tape t;
  int x = t.constant(Tensor::vec({1.0, 2.0}));
  int y = t.sum(t.mul(x, x));
  CHECK(t.val(y).item() == 5.0);
  Gradients g = t.backward(y);
  CHECK(grad_of(g, t, x) == Tensor::vec({2.0, 4.0}));
}

TEST_CASE("backward: log softmax picks up 1-p and -p") {
  Tape t;
  int x = t.constant(Tensor::vec({0.0, 0.0}));
  int y = t.log_(t.pick(t.softmax(x), 0));
  CHECK(t.val(y).item() == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  Gradients g = t.backward(y);
  Tensor gx = grad_of(g, t, x);
  CHECK(gx.at(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(gx.at(1) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("backward: max tie routes gradient to the first maximum") {
  Tape t;
  int x = t.constant(Tensor::vec({3.0, 3.0}));
  int y = t.max_reduce(x);
  Gradients g = t.backward(y);
  CHECK(grad_of(g, t, x) == Tensor::vec({1.0, 0.0}));
}

TEST_CASE("backward: relu subgradient at zero is zero") {
  Tape t;
  int x = t.constant(Tensor::vec({0.0, -1.0, 2.0}));
  int y = t.sum(t.relu(x));
  Gradients g = t.backward(y);
  CHECK(grad_of(g, t, x) == Tensor::vec({0.0, 0.0, 1.0}));
}

TEST_CASE("backward: matmul, matvec, broadcast accumulate correctly") {
  Tape t;
  int m = t.constant(Tensor::mat(2, 2, {1, 2, 3, 4}));
  int v = t.constant(Tensor::vec({5.0, 6.0}));
  // y = sum(M v): dM = [v v]^T rows, dv = col sums of M
  int y = t.sum(t.matvec(m, v));
  Gradients g = t.backward(y);
  CHECK(grad_of(g, t, m) == Tensor::mat(2, 2, {5, 6, 5, 6}));
  CHECK(grad_of(g, t, v) == Tensor::vec({4.0, 6.0}));

  Tape t2;
  int a = t2.constant(Tensor::mat(2, 2, {1, 2, 3, 4}));
  int b = t2.constant(Tensor::vec({10.0, 100.0}));
  // y = sum(A + b_per_column): each b entry hit once per column
  Gradients g2 = t2.backward(t2.sum(t2.add(a, b)));
  CHECK(grad_of(g2, t2, b) == Tensor::vec({2.0, 2.0}));
  CHECK(grad_of(g2, t2, a) == Tensor::mat(2, 2, {1, 1, 1, 1}));

  Tape t3;
  int s = t3.constant(Tensor::scalar(3.0));
  int c = t3.constant(Tensor::vec({1.0, 2.0}));
  Gradients g3 = t3.backward(t3.sum(t3.mul(s, c)));
  CHECK(grad_of(g3, t3, s).item() == 3.0);
  CHECK(grad_of(g3, t3, c) == Tensor::vec({3.0, 3.0}));
}

TEST_CASE("params: node reuse accumulates gradients across uses") {
  ParamStore store(7);
  Tape t;
  int p1 = t.param(store, "x/w", {2});
  int p2 = t.param(store, "x/w", {2});
  CHECK(p1 == p2);

  // y = sum(w) + sum(w * w): dy/dw = 1 + 2w
  int y = t.add(t.sum(p1), t.sum(t.mul(p1, p2)));
  Gradients g = t.backward(y);
  const Tensor& w = store.get("x/w");
  const Tensor& gw = g.by_param.at("x/w");
  for (int i = 0; i < 2; ++i)
    CHECK(gw.at(i) == doctest::Approx(1.0 + 2.0 * w.at(i)).epsilon(1e-12));
}

TEST_CASE("params: unreached parameters get explicit zero gradients") {
  ParamStore store(7);
  Tape t;
  int used = t.param(store, "x/used", {2});
  t.param(store, "x/unused", {3});
  Gradients g = t.backward(t.sum(used));
  REQUIRE(g.by_param.count("x/unused") == 1);
  CHECK(g.by_param.at("x/unused") == Tensor::vec({0.0, 0.0, 0.0}));
  CHECK(g.by_param.at("x/used") == Tensor::vec({1.0, 1.0}));
}

TEST_CASE("params: named init is creation-order independent") {
  ParamStore a(42), b(42);
  Tensor& w1 = a.ensure("find/B", {4, 4});
  Tensor& v1 = a.ensure("find/v/city", {4});
  Tensor& v2 = b.ensure("find/v/city", {4});
  Tensor& w2 = b.ensure("find/B", {4, 4});
  CHECK(w1 == w2);
  CHECK(v1 == v2);

  ParamStore c(43);
  CHECK_FALSE(c.ensure("find/B", {4, 4}) == w1);  // seed matters

  CHECK(a.ensure("find/d", {4}, Init::Zero) == Tensor::vec({0, 0, 0, 0}));
  CHECK(a.ensure("encoder/bf", {2}, Init::One) == Tensor::vec({1, 1}));
}

TEST_CASE("param init range respects fan-in/fan-out bound") {
  ParamStore store(1);
  const Tensor& m = store.ensure("x/m", {8, 24});
  double bound = std::sqrt(6.0 / (8 + 24));
  for (double x : m.v) {
    CHECK(x <= bound);
    CHECK(x >= -bound);
  }
  // not all zero
  double mag = 0.0;
  for (double x : m.v) mag += std::abs(x);
  CHECK(mag > 0.0);
}

TEST_CASE("tape rebuild is bitwise deterministic") {
  auto build = [] {
    ParamStore store(11);
    Tape t;
    int w = t.param(store, "x/w", {3, 3});
    int v = t.param(store, "x/v", {3});
    int y = t.sum(t.softmax(t.matvec(w, t.relu(v))));
    Gradients g = t.backward(y);
    return std::make_pair(t.val(y).item(), g.by_param.at("x/w"));
  };
  auto [y1, g1] = build();
  auto [y2, g2] = build();
  CHECK(y1 == y2);
  CHECK(g1 == g2);
}

TEST_CASE("dump_json lists ops in order") {
  Tape t;
  int a = t.constant(Tensor::scalar(1.0));
  t.relu(a);
  std::string js = t.dump_json();
  CHECK(js.find("\"constant\"") != std::string::npos);
  CHECK(js.find("\"relu\"") != std::string::npos);
}

TEST_CASE("relu fault injection hook flips backward only") {
  Tape t;
  int x = t.constant(Tensor::vec({2.0, -1.0}));
  int y = t.sum(t.relu(x));
  tape_debug::relu_backward_sign = -1.0;
  Gradients g = t.backward(y);
  tape_debug::relu_backward_sign = 1.0;
  CHECK(grad_of(g, t, x) == Tensor::vec({-1.0, 0.0}));
  CHECK(t.val(y).item() == 2.0);  // forward untouched
}
