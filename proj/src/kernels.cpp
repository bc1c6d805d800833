#include "faultpred/kernels.hpp"

#include <exception>

#include "faultpred/errors.hpp"

namespace faultpred::kernels {

namespace {

void add_into(ParamTensors& acc, const ParamTensors& x) {
  auto dst = acc.tensors();
  const auto src = x.tensors();
  for (std::size_t t = 0; t < kTensorCount; ++t) {
    for (std::size_t i = 0; i < dst[t].values.size(); ++i) dst[t].values[i] += src[t].values[i];
  }
}

void rethrow_first(const std::vector<std::exception_ptr>& failures) {
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

}  // namespace

BatchGradients batch_gradients_serial(const ModelParams& p, Pooling pooling,
                                      std::span<const Window> windows,
                                      std::span<const std::size_t> batch, const ClassWeights& w) {
  BatchGradients out{0.0, ParamTensors::zeros(p.dims)};
  for (const auto idx : batch) {
    const Window& win = windows[idx];
    const auto fwd = model_forward(win.values, p, pooling);
    const auto lv = weighted_ce(fwd.probability, win.label, w);
    out.loss_sum += lv.loss;
    model_backward_accumulate(fwd.trace, lv.dloss_dprob, p, out.grad_sum);
  }
  return out;
}

BatchGradients batch_gradients_parallel(const ModelParams& p, Pooling pooling,
                                        std::span<const Window> windows,
                                        std::span<const std::size_t> batch,
                                        const ClassWeights& w) {
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
  std::vector<ParamTensors> grads(batch.size());
  std::vector<double> losses(batch.size(), 0.0);
  std::vector<std::exception_ptr> failures(batch.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const Window& win = windows[batch[i]];
      const auto fwd = model_forward(win.values, p, pooling);
      const auto lv = weighted_ce(fwd.probability, win.label, w);
      losses[i] = lv.loss;
      grads[i] = ParamTensors::zeros(p.dims);
      model_backward_accumulate(fwd.trace, lv.dloss_dprob, p, grads[i]);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  rethrow_first(failures);

  BatchGradients out{0.0, ParamTensors::zeros(p.dims)};
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out.loss_sum += losses[i];
    add_into(out.grad_sum, grads[i]);
  }
  return out;
}

std::vector<double> score_windows_serial(const ModelParams& p, Pooling pooling,
                                         std::span<const Window> windows,
                                         std::span<const std::size_t> selection) {
  std::vector<double> scores;
  scores.reserve(selection.size());
  for (const auto idx : selection) scores.push_back(model_predict(windows[idx].values, p, pooling));
  return scores;
}

std::vector<double> score_windows_parallel(const ModelParams& p, Pooling pooling,
                                           std::span<const Window> windows,
                                           std::span<const std::size_t> selection) {
  const auto n = static_cast<std::ptrdiff_t>(selection.size());
  std::vector<double> scores(selection.size(), 0.0);
  std::vector<std::exception_ptr> failures(selection.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      scores[i] = model_predict(windows[selection[i]].values, p, pooling);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  rethrow_first(failures);
  return scores;
}

}  // namespace faultpred::kernels
