#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "faultpred/numerics.hpp"

namespace faultpred {

/// Sizes of one GRU + attention + feedforward classifier.
struct ModelDims {
  std::size_t input_dim = 4;     // features per time step
  std::size_t hidden_dim = 64;   // GRU state width
  std::size_t window_len = 48;   // time steps per window
  std::size_t head_hidden = 32;  // feedforward hidden width

  /// Throws ConfigError if any size is zero.
  void validate() const;
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// How hidden states are collapsed into the context vector.
enum class Pooling : std::uint8_t { kAttention = 0, kMean = 1 };

std::string_view to_string(Pooling p) noexcept;
/// Throws ConfigError for anything other than "attention" or "mean".
Pooling parse_pooling(std::string_view text);

constexpr std::size_t kTensorCount = 15;

/// Named view of one tensor, flattened row-major.
struct TensorView {
  std::string_view name;
  std::size_t rows;
  std::size_t cols;
  std::span<double> values;
};

struct ConstTensorView {
  std::string_view name;
  std::size_t rows;
  std::size_t cols;
  std::span<const double> values;
};

/// Every learnable tensor of the classifier. Used both for parameters and
/// for their gradients, so the two always share a layout.
struct ParamTensors {
  // GRU update gate
  Matrix update_input;      // H x D
  Matrix update_recurrent;  // H x H
  Vector update_bias;       // H
  // GRU reset gate
  Matrix reset_input;
  Matrix reset_recurrent;
  Vector reset_bias;
  // GRU candidate state
  Matrix cand_input;
  Matrix cand_recurrent;
  Vector cand_bias;
  // attention scoring: score_t = h_t . (attn_matrix * attn_query)
  Matrix attn_matrix;  // H x H
  Vector attn_query;   // H
  // feedforward head
  Matrix head_hidden_weight;  // head_hidden x H
  Vector head_hidden_bias;    // head_hidden
  Matrix head_out_weight;     // 1 x head_hidden
  Vector head_out_bias;       // 1

  /// Zero tensors shaped for dims.
  static ParamTensors zeros(const ModelDims& dims);

  std::array<TensorView, kTensorCount> tensors();
  std::array<ConstTensorView, kTensorCount> tensors() const;

  std::size_t parameter_count() const;
  void set_zero();
  /// Checks every tensor against dims; throws ShapeError naming the tensor.
  void check_shapes(const ModelDims& dims) const;

  friend bool operator==(const ParamTensors&, const ParamTensors&) = default;
};

struct ModelParams : ParamTensors {
  ModelDims dims;

  /// 64-bit digest of the parameter bits. Forward traces remember it so a
  /// backward pass against different parameters is detected.
  std::uint64_t fingerprint() const noexcept;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct ParamGrads : ParamTensors {
  static ParamGrads zeros_like(const ModelParams& p);
};

/// Glorot-uniform weights (bound sqrt(6 / (fan_in + fan_out)) per tensor),
/// zero biases. Deterministic in seed.
ModelParams init_params(const ModelDims& dims, std::uint64_t seed);

/// Per-step GRU intermediates.
struct GruCellCache {
  Vector update;     // z_t
  Vector reset;      // r_t
  Vector candidate;  // tanh candidate state
};

/// One GRU step:
///   z = sigmoid(Wz x + Uz h_prev + bz)
///   r = sigmoid(Wr x + Ur h_prev + br)
///   c = tanh(Wh x + Uh (r . h_prev) + bh)
///   h = (1 - z) . h_prev + z . c
Vector gru_cell_forward(const Vector& x, const Vector& h_prev, const ModelParams& p,
                        GruCellCache* cache = nullptr);

/// Hidden states for every row of the window plus the gate activations.
struct SequenceOutput {
  Matrix hidden;     // T x H
  Matrix update;     // T x H
  Matrix reset;      // T x H
  Matrix candidate;  // T x H
};

/// Runs the cell over all rows of window starting from a zero state.
SequenceOutput gru_sequence_forward(const Matrix& window, const ModelParams& p);

struct AttentionOutput {
  Vector context;  // s
  Vector weights;  // alpha, sums to 1
  Vector scores;   // pre-softmax
  Vector key;      // attn_matrix * attn_query
};

AttentionOutput attention_pool(const Matrix& hidden, const Matrix& attn_matrix,
                               const Vector& attn_query);

Vector mean_pool(const Matrix& hidden);

struct HeadOutput {
  Vector hidden;  // tanh(W1 s + b1)
  double logit = 0.0;
  double probability = 0.5;
};

HeadOutput head_forward_full(const Vector& context, const ModelParams& p);
double head_forward(const Vector& context, const ModelParams& p);

/// Everything the backward pass needs from one forward pass.
struct ForwardTrace {
  Pooling pooling = Pooling::kAttention;
  Matrix input;  // T x D
  SequenceOutput sequence;
  AttentionOutput attention;  // weights are uniform under mean pooling
  HeadOutput head;
  std::uint64_t params_fingerprint = 0;
};

struct ForwardResult {
  double probability;
  Vector weights;
  ForwardTrace trace;
};

ForwardResult model_forward(const Matrix& window, const ModelParams& p, Pooling pooling);

/// Probability only; skips building the trace bookkeeping the caller does not need.
double model_predict(const Matrix& window, const ModelParams& p, Pooling pooling);

/// Exact gradient of a scalar loss L(probability) w.r.t. every parameter,
/// given dL/dprobability. Throws ContractError if trace came from other params.
ParamGrads model_backward(const ForwardTrace& trace, double dloss_dprob, const ModelParams& p);

/// Same as model_backward but accumulates into grads (must be shaped like p).
void model_backward_accumulate(const ForwardTrace& trace, double dloss_dprob,
                               const ModelParams& p, ParamTensors& grads);

}  // namespace faultpred
