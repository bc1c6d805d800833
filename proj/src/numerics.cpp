#include "faultpred/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "faultpred/errors.hpp"

namespace faultpred {

void Vector::fill(double v) noexcept { std::fill(data_.begin(), data_.end(), v); }

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix " + std::to_string(rows_) + "x" + std::to_string(cols_) + " given " +
                     std::to_string(data_.size()) + " values");
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) noexcept { std::fill(data_.begin(), data_.end(), v); }

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t sm = seed;
  for (auto& word : s_) word = splitmix64(sm);
}

namespace {
constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }
}  // namespace

std::uint64_t SeededRng::next_u64() noexcept {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double SeededRng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform(double lo, double hi) noexcept {
  // closed interval: 53-bit integer scaled by 1/(2^53 - 1)
  const double u = static_cast<double>(next_u64() >> 11) / 9007199254740991.0;
  return lo + (hi - lo) * u;
}

std::uint64_t SeededRng::below(std::uint64_t n) noexcept {
  // Lemire-style rejection keeps the result unbiased.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

double SeededRng::normal() noexcept {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

SeededRng SeededRng::fork(std::uint64_t stream_id) const noexcept {
  std::uint64_t sm = seed_ ^ (0xD1B54A32D192ED03ULL * (stream_id + 1));
  return SeededRng(splitmix64(sm));
}

double sigmoid(double v) noexcept {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

Vector matvec(const Matrix& a, const Vector& x) {
  if (a.cols() != x.size()) {
    throw ShapeError("matvec: matrix has " + std::to_string(a.cols()) + " cols, vector has " +
                     std::to_string(x.size()) + " entries");
  }
  Vector y(a.rows());
  matvec_accumulate(a, x.span(), y.span());
  return y;
}

Vector matvec_transposed(const Matrix& a, const Vector& x) {
  if (a.rows() != x.size()) {
    throw ShapeError("matvec_transposed: matrix has " + std::to_string(a.rows()) +
                     " rows, vector has " + std::to_string(x.size()) + " entries");
  }
  Vector y(a.cols());
  matvec_t_accumulate(a, x.span(), y.span());
  return y;
}

void matvec_accumulate(const Matrix& a, std::span<const double> x, std::span<double> y) noexcept {
  const std::size_t n = a.cols();
  const double* row = a.data();
  for (std::size_t i = 0; i < a.rows(); ++i, row += n) {
    // four independent partial sums, combined in a fixed order
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      acc[0] += row[j] * x[j];
      acc[1] += row[j + 1] * x[j + 1];
      acc[2] += row[j + 2] * x[j + 2];
      acc[3] += row[j + 3] * x[j + 3];
    }
    for (; j < n; ++j) acc[0] += row[j] * x[j];
    y[i] += (acc[0] + acc[1]) + (acc[2] + acc[3]);
  }
}

void matvec_t_accumulate(const Matrix& a, std::span<const double> x, std::span<double> y) noexcept {
  const std::size_t n = a.cols();
  const double* row = a.data();
  for (std::size_t i = 0; i < a.rows(); ++i, row += n) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) y[j] += row[j] * xi;
  }
}

void outer_accumulate(Matrix& a, std::span<const double> u, std::span<const double> v) noexcept {
  const std::size_t n = a.cols();
  double* row = a.data();
  for (std::size_t i = 0; i < a.rows(); ++i, row += n) {
    const double ui = u[i];
    if (ui == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) row[j] += ui * v[j];
  }
}

Vector elem_activation(const Vector& x, Activation kind) {
  Vector y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = kind == Activation::kSigmoid ? sigmoid(x[i]) : std::tanh(x[i]);
  }
  return y;
}

Vector stable_softmax(const Vector& scores) {
  if (scores.empty()) throw ShapeError("stable_softmax: empty score vector");
  const double m = *std::max_element(scores.begin(), scores.end());
  Vector out(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - m);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return out;
}

Matrix init_uniform(std::size_t rows, std::size_t cols, double scale, SeededRng& rng) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ConfigError("init_uniform: scale must be a positive finite number, got " +
                      std::to_string(scale));
  }
  Matrix m(rows, cols);
  for (auto& v : m.span()) v = rng.uniform(-scale, scale);
  return m;
}

Vector finite_diff_grad(const std::function<double(const Vector&)>& f, const Vector& p,
                        double eps) {
  if (!(eps > 0.0)) throw ConfigError("finite_diff_grad: eps must be positive");
  Vector g(p.size());
  Vector probe = p;
  for (std::size_t i = 0; i < p.size(); ++i) {
    probe[i] = p[i] + eps;
    const double up = f(probe);
    probe[i] = p[i] - eps;
    const double down = f(probe);
    probe[i] = p[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_diff_grad: objective not finite at coordinate " +
                         std::to_string(i));
    }
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

bool all_finite(std::span<const double> values) noexcept {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double l2_norm(std::span<const double> a) noexcept { return std::sqrt(dot(a, a)); }

}  // namespace faultpred
