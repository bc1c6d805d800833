#include <doctest.h>

#include <cmath>

#include "faultpred/errors.hpp"
#include "faultpred/numerics.hpp"

using namespace faultpred;

namespace {

Vector random_vector(std::size_t n, SeededRng& rng, double lo = -1.0, double hi = 1.0) {
  Vector v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace

TEST_CASE("matvec examples") {
  Vector x{1, 2, 3};
  CHECK(matvec(Matrix::identity(3), x) == x);
  CHECK(matvec(Matrix(2, 2), Vector{5, 7}) == Vector{0, 0});
  CHECK(matvec(Matrix{{1, 2}, {3, 4}}, Vector{1, 1}) == Vector{3, 7});
  CHECK_THROWS_AS(matvec(Matrix(2, 3), Vector{1, 2}), ShapeError);
}

TEST_CASE("matvec_transposed matches explicit transpose") {
  Matrix a{{1, 2, 3}, {4, 5, 6}};
  CHECK(matvec_transposed(a, Vector{1, -1}) == Vector{-3, -3, -3});
}

TEST_CASE("matvec distributes over addition") {
  SeededRng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t r = 1 + rng.below(9), c = 1 + rng.below(9);
    Matrix a = init_uniform(r, c, 2.0, rng);
    Vector x = random_vector(c, rng), y = random_vector(c, rng), xy(c);
    for (std::size_t i = 0; i < c; ++i) xy[i] = x[i] + y[i];
    Vector lhs = matvec(a, xy), ax = matvec(a, x), ay = matvec(a, y);
    for (std::size_t i = 0; i < r; ++i) CHECK(lhs[i] == doctest::Approx(ax[i] + ay[i]).epsilon(1e-10));
  }
}

TEST_CASE("accumulating kernels agree with naive loops") {
  SeededRng rng(3);
  for (std::size_t cols : {1u, 3u, 4u, 7u, 64u}) {
    Matrix a = init_uniform(5, cols, 1.0, rng);
    Vector x = random_vector(cols, rng);
    Vector y(5, 1.0);
    matvec_accumulate(a, x.span(), y.span());
    for (std::size_t r = 0; r < 5; ++r) {
      double ref = 1.0;
      for (std::size_t c = 0; c < cols; ++c) ref += a(r, c) * x[c];
      CHECK(std::abs(y[r] - ref) < 1e-12);
    }
    Vector u = random_vector(5, rng);
    Vector t(cols);
    matvec_t_accumulate(a, u.span(), t.span());
    for (std::size_t c = 0; c < cols; ++c) {
      double ref = 0.0;
      for (std::size_t r = 0; r < 5; ++r) ref += a(r, c) * u[r];
      CHECK(std::abs(t[c] - ref) < 1e-12);
    }
    Matrix o(5, cols);
    outer_accumulate(o, u.span(), x.span());
    CHECK(o(4, cols - 1) == u[4] * x[cols - 1]);
  }
}

TEST_CASE("activations") {
  CHECK(elem_activation(Vector{0}, Activation::kSigmoid)[0] == 0.5);
  CHECK(elem_activation(Vector{0}, Activation::kTanh)[0] == 0.0);
  CHECK(elem_activation(Vector{std::log(3.0)}, Activation::kSigmoid)[0] ==
        doctest::Approx(0.75).epsilon(1e-15));
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(std::isfinite(sigmoid(-800.0)));
}

TEST_CASE("stable_softmax examples") {
  for (double c : {-5.0, 0.0, 3.25, 1e6}) {
    Vector s = stable_softmax(Vector{c, c, c});
    for (double v : s) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  Vector two = stable_softmax(Vector{std::log(2.0), 0.0});
  CHECK(two[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(two[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  Vector big = stable_softmax(Vector{1000.0, 0.0});
  CHECK(big[0] == 1.0);
  CHECK(big[1] >= 0.0);
  CHECK(all_finite(big.span()));
  CHECK_THROWS_AS(stable_softmax(Vector{}), ShapeError);
}

TEST_CASE("stable_softmax sums to one and is shift invariant") {
  SeededRng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    Vector s = random_vector(1 + rng.below(40), rng, -20.0, 20.0);
    const double c = rng.uniform(-50.0, 50.0);
    Vector shifted = s;
    for (auto& v : shifted) v += c;
    Vector a = stable_softmax(s), b = stable_softmax(shifted);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      sum += a[i];
      CHECK(std::abs(a[i] - b[i]) <= 1e-12);
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("init_uniform") {
  SeededRng a(9), b(9);
  Matrix ma = init_uniform(4, 6, 0.3, a);
  CHECK(ma == init_uniform(4, 6, 0.3, b));
  for (double v : ma.span()) CHECK(std::abs(v) <= 0.3);
  SeededRng c(1);
  Matrix tiny = init_uniform(3, 3, 1e-300, c);
  for (double v : tiny.span()) CHECK(std::abs(v) <= 1e-300);
  CHECK_THROWS_AS(init_uniform(2, 2, 0.0, c), ConfigError);
  CHECK_THROWS_AS(init_uniform(2, 2, -1.0, c), ConfigError);
}

TEST_CASE("finite_diff_grad examples") {
  auto sq = [](const Vector& p) {
    double s = 0;
    for (double v : p) s += v * v;
    return s;
  };
  Vector g = finite_diff_grad(sq, Vector{1, 2});
  CHECK(std::abs(g[0] - 2.0) <= 1e-8);
  CHECK(std::abs(g[1] - 4.0) <= 1e-8);

  Vector zero = finite_diff_grad([](const Vector&) { return 7.0; }, Vector{1, 2, 3});
  for (double v : zero) CHECK(v == 0.0);

  Vector lin = finite_diff_grad([](const Vector& p) { return p[0]; }, Vector{-3, 8, 0.5});
  CHECK(lin[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(lin[1] == 0.0);
  CHECK(lin[2] == 0.0);

  CHECK_THROWS_AS(finite_diff_grad([](const Vector&) { return std::nan(""); }, Vector{1}),
                  NumericError);
}

TEST_CASE("finite_diff_grad matches polynomial derivatives") {
  SeededRng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    Vector p = random_vector(3, rng, -2.0, 2.0);
    // f = x^3 y + 2 y^2 z - z^4
    auto f = [](const Vector& v) {
      return v[0] * v[0] * v[0] * v[1] + 2 * v[1] * v[1] * v[2] - std::pow(v[2], 4);
    };
    const double x = p[0], y = p[1], z = p[2];
    const double expected[3] = {3 * x * x * y, x * x * x + 4 * y * z, 2 * y * y - 4 * z * z * z};
    Vector g = finite_diff_grad(f, p, 1e-5);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(g[i] - expected[i]) <= 1e-6);
  }
}

TEST_CASE("SeededRng is reproducible") {
  SeededRng a(1234), b(1234), c(1235);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    differs |= va != c.next_u64();
  }
  CHECK(differs);
  SeededRng f1 = SeededRng(5).fork(2), f2 = SeededRng(5).fork(2), f3 = SeededRng(5).fork(3);
  CHECK(f1.next_u64() == f2.next_u64());
  CHECK(f1.next_u64() != f3.next_u64());
}

TEST_CASE("SeededRng distributions") {
  SeededRng rng(77);
  double sum = 0, sumsq = 0;
  const int n = 200000;
  std::size_t counts[5] = {};
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK_UNARY(u >= 0.0);
    CHECK_UNARY(u < 1.0);
    const double z = rng.normal();
    sum += z;
    sumsq += z * z;
    ++counts[rng.below(5)];
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sumsq / n - 1.0) < 0.02);
  for (auto k : counts) CHECK(std::abs(static_cast<double>(k) / n - 0.2) < 0.01);
}

TEST_CASE("Matrix constructor validates size") {
  CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
  Matrix m(2, 2, std::vector<double>{1, 2, 3, 4});
  CHECK(m(1, 0) == 3);
}
