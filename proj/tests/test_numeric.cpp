#include <cmath>
#include <random>

#include "doctest.h"
#include "srlstm/params.hpp"
#include "srlstm/tensor.hpp"
#include "support.hpp"

using namespace srlstm;
using srlstm::testing::random_tensor;

TEST_CASE("matmul identity and scalar") {
  std::mt19937_64 rng(3);
  Tensor2 m = random_tensor(3, 3, rng);
  CHECK(matmul(Tensor2::identity(3), m) == m);
  CHECK(matmul(Tensor2::from_rows({{2}}), Tensor2::from_rows({{3}}))[0] == 6.0);
}

TEST_CASE("matmul matches triple loop") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor2 a = random_tensor(5, 4, rng), b = random_tensor(4, 3, rng);
    Tensor2 c = matmul(a, b);
    REQUIRE(c.rows() == 5);
    REQUIRE(c.cols() == 3);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < 4; ++k) s += a(i, k) * b(k, j);
        CHECK(std::abs(c(i, j) - s) < 1e-12);
      }
    Tensor2 tn = matmul_tn(a.transposed(), b);
    Tensor2 nt = matmul_nt(a, b.transposed());
    CHECK(srlstm::testing::max_abs_diff(tn, c) < 1e-12);
    CHECK(srlstm::testing::max_abs_diff(nt, c) < 1e-12);
  }
}

TEST_CASE("matmul rows do not depend on other rows") {
  std::mt19937_64 rng(5);
  Tensor2 a = random_tensor(7, 13, rng), b = random_tensor(13, 9, rng);
  Tensor2 full = matmul(a, b);
  for (std::size_t r = 0; r < 7; ++r) {
    Tensor2 single = matmul(Tensor2::row_vector(a.row(r)), b);
    for (std::size_t j = 0; j < 9; ++j) CHECK(single[j] == full(r, j));
  }
}

TEST_CASE("matmul shape mismatch") {
  CHECK_THROWS_AS(matmul(Tensor2(2, 3), Tensor2(2, 3)), DimensionError);
  CHECK_THROWS_AS(elementwise(Elementwise::add, Tensor2(2, 3), Tensor2(3, 2)), DimensionError);
}

TEST_CASE("elementwise ops") {
  CHECK(elementwise(Elementwise::sigmoid, Tensor2(1, 1))[0] == 0.5);
  std::mt19937_64 rng(2);
  Tensor2 x = random_tensor(4, 5, rng);
  CHECK(elementwise(Elementwise::hadamard, x, Tensor2(4, 5, 1.0)) == x);
  Tensor2 grid = Tensor2::from_rows({{-2, -1, 0, 1, 2}});
  Tensor2 t = elementwise(Elementwise::tanh, grid);
  for (std::size_t i = 0; i < 5; ++i) {
    const double v = grid[i];
    const double oracle = (std::exp(v) - std::exp(-v)) / (std::exp(v) + std::exp(-v));
    CHECK(std::abs(t[i] - oracle) < 1e-12);
  }
  Tensor2 wide = random_tensor(1, 200, rng, 40.0);
  const Tensor2 sw = elementwise(Elementwise::sigmoid, wide), tw = elementwise(Elementwise::tanh, wide);
  for (double v : sw.data()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  for (double v : tw.data()) CHECK(std::abs(v) <= 1.0);
}

TEST_CASE("non-finite values are rejected") {
  Tensor2 t(1, 2);
  t[1] = std::nan("");
  CHECK_THROWS_AS(require_finite(t, "t"), NumericError);
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("softmax_masked examples") {
  std::vector<double> one{5.0};
  CHECK(softmax_masked(one, {true})[0] == 1.0);

  std::vector<double> zeros{0, 0, 0};
  for (double v : softmax_masked(zeros, {true, true, true})) CHECK(std::abs(v - 1.0 / 3.0) < 1e-15);

  std::vector<double> two{1, 2};
  auto s = softmax_masked(two, {true, true});
  const double z = std::exp(1.0) + std::exp(2.0);
  CHECK(std::abs(s[0] - std::exp(1.0) / z) < 1e-12);
  CHECK(std::abs(s[1] - std::exp(2.0) / z) < 1e-12);

  std::vector<double> masked{3, 1, 7};
  auto m = softmax_masked(masked, {true, false, true});
  CHECK(m[1] == 0.0);
  CHECK(std::abs(m[0] + m[2] - 1.0) < 1e-9);

  CHECK_THROWS_AS(softmax_masked(masked, {false, false, false}), EmptySupportError);
}

TEST_CASE("softmax_masked is stable for large scores") {
  std::vector<double> big{500, 499, -500};
  auto s = softmax_masked(big, {true, true, true});
  for (double v : s) CHECK(std::isfinite(v));
  CHECK(std::abs(s[0] + s[1] + s[2] - 1.0) < 1e-9);
  CHECK(std::abs(s[0] / s[1] - std::exp(1.0)) < 1e-9);
}

TEST_CASE("softmax_masked sums to one on random input") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-30, 30);
  std::bernoulli_distribution keep(0.6);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> scores(1 + trial % 9);
    std::vector<bool> mask(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
      scores[i] = u(rng);
      mask[i] = keep(rng);
    }
    mask[trial % scores.size()] = true;
    auto s = softmax_masked(scores, mask);
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!mask[i]) CHECK(s[i] == 0.0);
      sum += s[i];
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("adam with zero gradients leaves values unchanged") {
  std::mt19937_64 rng(1);
  ParamStore store;
  Tensor2 init = random_tensor(3, 4, rng);
  store.add("w", init);
  AdamState state;
  adam_step(store, state);
  CHECK(store.value("w") == init);
  CHECK(state.step == 1);
}

TEST_CASE("adam first step moves by lr against the gradient sign") {
  for (double g : {0.3, -2.5, 1e-3}) {
    ParamStore store;
    store.add("p", Tensor2(1, 1, 1.0));
    store.grad("p")[0] = g;
    AdamState state;
    CHECK(state.learning_rate == 0.001);
    adam_step(store, state);
    // m̂ = g, v̂ = g², update = lr g / (|g| + eps)
    const double expected = 1.0 - 0.001 * g / (std::abs(g) + 1e-8);
    CHECK(std::abs(store.value("p")[0] - expected) < 1e-15);
    CHECK(std::abs(store.value("p")[0] - (1.0 - 0.001 * (g > 0 ? 1 : -1))) < 1e-7);
    CHECK(store.grad("p")[0] == 0.0);
  }
}

TEST_CASE("adam matches a hand-rolled recurrence") {
  ParamStore store;
  store.add("p", Tensor2(1, 2, 0.5));
  AdamState state;
  double m[2] = {0, 0}, v[2] = {0, 0}, x[2] = {0.5, 0.5};
  for (int t = 1; t <= 5; ++t) {
    const double g[2] = {0.1 * t, -0.2 + 0.05 * t};
    store.grad("p")[0] = g[0];
    store.grad("p")[1] = g[1];
    adam_step(store, state);
    for (int i = 0; i < 2; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(0.9, t));
      const double vh = v[i] / (1 - std::pow(0.999, t));
      x[i] -= 0.001 * mh / (std::sqrt(vh) + 1e-8);
      CHECK(std::abs(store.value("p")[i] - x[i]) < 1e-14);
    }
  }
  for (double mv : state.second_moment.at("p").data()) CHECK(mv >= 0.0);
}

TEST_CASE("adam skips frozen entries and names NaN gradients") {
  ParamStore store;
  store.add("frozen", Tensor2(1, 1, 2.0), false);
  store.add("live", Tensor2(1, 1, 2.0));
  store.grad("frozen")[0] = 1.0;
  store.grad("live")[0] = 1.0;
  AdamState state;
  adam_step(store, state);
  CHECK(store.value("frozen")[0] == 2.0);
  CHECK(store.value("live")[0] < 2.0);

  store.grad("live")[0] = std::nan("");
  try {
    adam_step(store, state);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("live") != std::string::npos);
  }
}

TEST_CASE("clip_grad_norm scales to the limit") {
  ParamStore store;
  store.add("a", Tensor2(1, 2));
  store.grad("a")[0] = 3.0;
  store.grad("a")[1] = 4.0;
  CHECK(clip_grad_norm(store, 1.0) == doctest::Approx(5.0));
  CHECK(std::abs(store.grad("a")[0] - 0.6) < 1e-15);
  CHECK(std::abs(store.grad("a")[1] - 0.8) < 1e-15);
}

TEST_CASE("finite_diff_check on a quadratic") {
  std::mt19937_64 rng(4);
  ParamStore store;
  store.add("p", random_tensor(3, 3, rng));
  store.add("q", random_tensor(1, 4, rng));
  auto loss = [](const ParamStore& s) {
    double l = 0.0;
    for (const auto& [name, e] : s.entries())
      for (double v : e.value.data()) l += 0.5 * v * v;
    return l;
  };
  for (auto& [name, e] : store.entries()) e.grad = e.value;
  GradCheckOptions opts;
  opts.samples_per_tensor = 0;
  Tensor2 before = store.value("p");
  GradCheckResult ok = finite_diff_check(loss, store, opts);
  CHECK(ok.max_relative_error < 1e-8);
  CHECK(ok.checked == 13);
  CHECK(store.value("p") == before);

  for (auto& [name, e] : store.entries())
    for (auto& g : e.grad.data()) g *= 2.0;
  GradCheckResult bad = finite_diff_check(loss, store, opts);
  CHECK(std::abs(bad.max_relative_error - 0.5) < 1e-6);
}
