#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <numeric>

#include "faultpred/kernels.hpp"
#include "faultpred/loss.hpp"

using namespace faultpred;

namespace {

std::vector<Window> random_windows(std::size_t n, std::size_t T, SeededRng& rng) {
  std::vector<Window> ws(n);
  for (std::size_t i = 0; i < n; ++i) {
    ws[i].values = Matrix(T, 4);
    for (auto& v : ws[i].values.span()) v = rng.normal();
    ws[i].label = rng.bernoulli(0.3);
  }
  return ws;
}

bool bit_equal(const ParamTensors& a, const ParamTensors& b) {
  auto ta = a.tensors();
  auto tb = b.tensors();
  for (std::size_t k = 0; k < kTensorCount; ++k)
    for (std::size_t i = 0; i < ta[k].values.size(); ++i)
      if (std::bit_cast<std::uint64_t>(ta[k].values[i]) != std::bit_cast<std::uint64_t>(tb[k].values[i]))
        return false;
  return true;
}

}  // namespace

TEST_CASE("parallel batch gradients agree with the serial reference") {
  SeededRng rng(1);
  const ModelDims d{4, 12, 10, 6};
  ModelParams p = init_params(d, 5);
  auto ws = random_windows(40, 10, rng);
  std::vector<std::size_t> batch{3, 17, 0, 39, 8, 8, 22, 5, 11};
  const ClassWeights w{3.0, 0.6};
  for (Pooling pool : {Pooling::kAttention, Pooling::kMean}) {
    auto s = kernels::batch_gradients_serial(p, pool, ws, batch, w);
    auto q = kernels::batch_gradients_parallel(p, pool, ws, batch, w);
    CHECK(q.loss_sum == doctest::Approx(s.loss_sum).epsilon(1e-13));
    auto ts = s.grad_sum.tensors();
    auto tq = q.grad_sum.tensors();
    for (std::size_t k = 0; k < kTensorCount; ++k)
      for (std::size_t i = 0; i < ts[k].values.size(); ++i)
        CHECK(std::abs(ts[k].values[i] - tq[k].values[i]) <= 1e-12 * (1 + std::abs(ts[k].values[i])));
  }
}

TEST_CASE("serial batch gradient is the sum of per-sample gradients") {
  SeededRng rng(2);
  const ModelDims d{4, 5, 6, 3};
  ModelParams p = init_params(d, 1);
  auto ws = random_windows(4, 6, rng);
  std::vector<std::size_t> batch{0, 1, 2, 3};
  const ClassWeights w{2.0, 0.5};
  auto s = kernels::batch_gradients_serial(p, Pooling::kAttention, ws, batch, w);
  ParamTensors ref = ParamGrads::zeros_like(p);
  double loss = 0;
  for (auto i : batch) {
    auto f = model_forward(ws[i].values, p, Pooling::kAttention);
    auto lv = weighted_ce(f.probability, ws[i].label, w);
    loss += lv.loss;
    model_backward_accumulate(f.trace, lv.dloss_dprob, p, ref);
  }
  CHECK(s.loss_sum == loss);
  CHECK(bit_equal(s.grad_sum, ref));
}

TEST_CASE("parallel kernels are bit identical across thread counts") {
  SeededRng rng(3);
  const ModelDims d{4, 10, 8, 5};
  ModelParams p = init_params(d, 9);
  auto ws = random_windows(64, 8, rng);
  std::vector<std::size_t> all(64);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const ClassWeights w{1.7, 0.4};
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  auto g1 = kernels::batch_gradients_parallel(p, Pooling::kAttention, ws, all, w);
  auto s1 = kernels::score_windows_parallel(p, Pooling::kAttention, ws, all);
  for (int threads : {2, 3, 8}) {
    omp_set_num_threads(threads);
    auto g = kernels::batch_gradients_parallel(p, Pooling::kAttention, ws, all, w);
    CHECK(g.loss_sum == g1.loss_sum);
    CHECK(bit_equal(g.grad_sum, g1.grad_sum));
    CHECK(kernels::score_windows_parallel(p, Pooling::kAttention, ws, all) == s1);
  }
  omp_set_num_threads(saved);
}

TEST_CASE("scoring kernels agree") {
  SeededRng rng(4);
  const ModelDims d{4, 7, 9, 4};
  ModelParams p = init_params(d, 2);
  auto ws = random_windows(30, 9, rng);
  std::vector<std::size_t> sel{29, 0, 15, 15, 3};
  for (Pooling pool : {Pooling::kAttention, Pooling::kMean}) {
    auto a = kernels::score_windows_serial(p, pool, ws, sel);
    auto b = kernels::score_windows_parallel(p, pool, ws, sel);
    REQUIRE(a.size() == sel.size());
    CHECK(a == b);
    CHECK(a[0] == model_predict(ws[29].values, p, pool));
  }
}
