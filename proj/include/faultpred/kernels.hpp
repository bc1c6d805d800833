#pragma once

// Data-parallel hot loops. Every kernel has a straightforward serial
// reference next to its OpenMP version; tests check they agree and the
// benchmark target compares their speed.

#include <cstddef>
#include <span>
#include <vector>

#include "faultpred/datapipe.hpp"
#include "faultpred/loss.hpp"
#include "faultpred/model.hpp"

namespace faultpred::kernels {

/// Summed loss and summed gradient over a batch (the caller averages).
struct BatchGradients {
  double loss_sum = 0.0;
  ParamTensors grad_sum;
};

BatchGradients batch_gradients_serial(const ModelParams& p, Pooling pooling,
                                      std::span<const Window> windows,
                                      std::span<const std::size_t> batch, const ClassWeights& w);

/// Per-sample gradients computed in parallel, then summed in batch order, so
/// the result does not depend on the thread count.
BatchGradients batch_gradients_parallel(const ModelParams& p, Pooling pooling,
                                        std::span<const Window> windows,
                                        std::span<const std::size_t> batch,
                                        const ClassWeights& w);

/// Fault probability for each selected window, in selection order.
std::vector<double> score_windows_serial(const ModelParams& p, Pooling pooling,
                                         std::span<const Window> windows,
                                         std::span<const std::size_t> selection);
std::vector<double> score_windows_parallel(const ModelParams& p, Pooling pooling,
                                           std::span<const Window> windows,
                                           std::span<const std::size_t> selection);

}  // namespace faultpred::kernels
