#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace faultpred {

/// Dense real vector. All model math runs in double precision.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, double fill = 0.0) : data_(n, fill) {}
  Vector(std::initializer_list<double> values) : data_(values) {}
  explicit Vector(std::vector<double> values) : data_(std::move(values)) {}

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  void fill(double v) noexcept;

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<double> data_;
};

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  /// Throws ShapeError when values.size() != rows*cols.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }

  void fill(double v) noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// xoshiro256** generator seeded through splitmix64.
///
/// The stream depends only on the 64-bit seed, and every derived
/// distribution below is computed from it with portable integer arithmetic
/// or IEEE operations, so experiments replay identically across platforms.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on [lo, hi].
  double uniform(double lo, double hi) noexcept;
  /// Uniform integer on [0, n). Requires n > 0.
  std::uint64_t below(std::uint64_t n) noexcept;
  /// Standard normal via Box-Muller (one draw per call, no caching).
  double normal() noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Independent child stream, e.g. one per node.
  SeededRng fork(std::uint64_t stream_id) const noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
};

/// splitmix64 finalizer; also used to derive child seeds.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;

enum class Activation { kSigmoid, kTanh };

double sigmoid(double v) noexcept;

Vector matvec(const Matrix& a, const Vector& x);
/// y = Aᵀ x
Vector matvec_transposed(const Matrix& a, const Vector& x);
/// y += A x on raw spans; sizes must already agree.
void matvec_accumulate(const Matrix& a, std::span<const double> x, std::span<double> y) noexcept;
/// y += Aᵀ x
void matvec_t_accumulate(const Matrix& a, std::span<const double> x, std::span<double> y) noexcept;
/// A += u vᵀ
void outer_accumulate(Matrix& a, std::span<const double> u, std::span<const double> v) noexcept;

Vector elem_activation(const Vector& x, Activation kind);

/// Softmax with max subtraction. Throws ShapeError on empty input.
Vector stable_softmax(const Vector& scores);

/// i.i.d. uniform entries on [-scale, scale]. Throws ConfigError for scale <= 0.
Matrix init_uniform(std::size_t rows, std::size_t cols, double scale, SeededRng& rng);

/// Central differences: g[i] = (f(p + eps e_i) - f(p - eps e_i)) / (2 eps).
/// Throws NumericError if f returns a non-finite value.
Vector finite_diff_grad(const std::function<double(const Vector&)>& f, const Vector& p,
                        double eps = 1e-5);

bool all_finite(std::span<const double> values) noexcept;
double dot(std::span<const double> a, std::span<const double> b) noexcept;
double l2_norm(std::span<const double> a) noexcept;

}  // namespace faultpred
