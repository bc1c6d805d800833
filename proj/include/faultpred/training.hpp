#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "faultpred/datapipe.hpp"
#include "faultpred/loss.hpp"
#include "faultpred/model.hpp"

namespace faultpred {

enum class OptimizerKind { kAdam, kSgd };

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  std::uint64_t seed = 42;
  Pooling pooling = Pooling::kAttention;
  std::size_t hidden_dim = 64;
  std::size_t head_hidden = 32;
  /// Unset means inverse-frequency weights from the training split.
  std::optional<ClassWeights> class_weights;

  void validate() const;
};

struct EpochLoss {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  friend bool operator==(const EpochLoss&, const EpochLoss&) = default;
};

using LossHistory = std::vector<EpochLoss>;

/// Writes `epoch,train_loss,val_loss` with shortest round-trip formatting.
void write_loss_csv(const LossHistory& history, std::ostream& out);
void write_loss_csv(const LossHistory& history, const std::string& path);
/// Parses the format written by write_loss_csv.
LossHistory read_loss_csv(std::istream& in);

struct AdamState {
  ParamTensors first_moment;
  ParamTensors second_moment;
  std::uint64_t step = 0;

  static AdamState zeros_like(const ModelParams& p);
};

/// One Adam update with bias-corrected moments. Throws NumericError on a
/// non-finite gradient (parameters and state are left untouched).
void adam_step(ModelParams& p, const ParamTensors& grads, AdamState& state,
               const TrainConfig& cfg);
/// Plain gradient descent, same contract.
void sgd_step(ModelParams& p, const ParamTensors& grads, const TrainConfig& cfg);

/// Mean weighted cross-entropy of the selected windows.
double mean_loss(const ModelParams& p, Pooling pooling, std::span<const Window> windows,
                 std::span<const std::size_t> selection, const ClassWeights& w);

struct TrainResult {
  ModelParams params;  // from the epoch with the lowest validation loss
  LossHistory history;
  ClassWeights weights;
  std::size_t best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochLoss&)>;

/// Seeded mini-batch training on the train split with per-epoch validation.
/// Throws DataError if the train or val split is empty or the train split
/// lacks a class.
TrainResult train(const WindowedDataset& ds, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

struct TensorCheck {
  std::string name;
  double relative_error = 0.0;
  double analytic_norm = 0.0;
  double numeric_norm = 0.0;
};

struct GradCheckReport {
  std::vector<TensorCheck> tensors;
  double tolerance = 1e-4;

  double max_error() const;
  bool passed() const { return max_error() <= tolerance; }
};

struct GradCheckOptions {
  Pooling pooling = Pooling::kAttention;
  double eps = 1e-5;
  double tolerance = 1e-4;
  ClassWeights weights{2.0, 0.5};
  /// Applied to the analytic gradient before comparison (mutation tests).
  std::function<void(ParamTensors&)> corrupt;
};

/// Compares model_backward against central differences of the full weighted
/// loss on a random window and random parameters drawn from seed.
GradCheckReport gradient_check(const ModelDims& dims, std::uint64_t seed,
                               const GradCheckOptions& opts = {});

/// ||a - b|| / (||a|| + ||b|| + 1e-12)
double relative_error(std::span<const double> a, std::span<const double> b);

}  // namespace faultpred
