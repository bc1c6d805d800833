#include "faultpred/model.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "faultpred/errors.hpp"

namespace faultpred {

void ModelDims::validate() const {
  if (input_dim == 0 || hidden_dim == 0 || window_len == 0 || head_hidden == 0) {
    throw ConfigError("model dims must all be >= 1 (input_dim=" + std::to_string(input_dim) +
                      ", hidden_dim=" + std::to_string(hidden_dim) +
                      ", window_len=" + std::to_string(window_len) +
                      ", head_hidden=" + std::to_string(head_hidden) + ")");
  }
}

std::string_view to_string(Pooling p) noexcept {
  return p == Pooling::kAttention ? "attention" : "mean";
}

Pooling parse_pooling(std::string_view text) {
  if (text == "attention") return Pooling::kAttention;
  if (text == "mean") return Pooling::kMean;
  throw ConfigError("unknown pooling '" + std::string(text) + "' (expected attention|mean)");
}

ParamTensors ParamTensors::zeros(const ModelDims& d) {
  const auto H = d.hidden_dim, D = d.input_dim, K = d.head_hidden;
  ParamTensors t;
  t.update_input = Matrix(H, D);
  t.update_recurrent = Matrix(H, H);
  t.update_bias = Vector(H);
  t.reset_input = Matrix(H, D);
  t.reset_recurrent = Matrix(H, H);
  t.reset_bias = Vector(H);
  t.cand_input = Matrix(H, D);
  t.cand_recurrent = Matrix(H, H);
  t.cand_bias = Vector(H);
  t.attn_matrix = Matrix(H, H);
  t.attn_query = Vector(H);
  t.head_hidden_weight = Matrix(K, H);
  t.head_hidden_bias = Vector(K);
  t.head_out_weight = Matrix(1, K);
  t.head_out_bias = Vector(1);
  return t;
}

namespace {

template <typename Self, typename View>
std::array<View, kTensorCount> collect(Self& t) {
  auto m = [](std::string_view n, auto& x) { return View{n, x.rows(), x.cols(), x.span()}; };
  auto v = [](std::string_view n, auto& x) { return View{n, x.size(), 1, x.span()}; };
  return {m("gru.update.input", t.update_input),
          m("gru.update.recurrent", t.update_recurrent),
          v("gru.update.bias", t.update_bias),
          m("gru.reset.input", t.reset_input),
          m("gru.reset.recurrent", t.reset_recurrent),
          v("gru.reset.bias", t.reset_bias),
          m("gru.candidate.input", t.cand_input),
          m("gru.candidate.recurrent", t.cand_recurrent),
          v("gru.candidate.bias", t.cand_bias),
          m("attention.matrix", t.attn_matrix),
          v("attention.query", t.attn_query),
          m("head.hidden.weight", t.head_hidden_weight),
          v("head.hidden.bias", t.head_hidden_bias),
          m("head.out.weight", t.head_out_weight),
          v("head.out.bias", t.head_out_bias)};
}

}  // namespace

std::array<TensorView, kTensorCount> ParamTensors::tensors() {
  return collect<ParamTensors, TensorView>(*this);
}

std::array<ConstTensorView, kTensorCount> ParamTensors::tensors() const {
  return collect<const ParamTensors, ConstTensorView>(*this);
}

std::size_t ParamTensors::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.values.size();
  return n;
}

void ParamTensors::set_zero() {
  for (auto& t : tensors()) std::fill(t.values.begin(), t.values.end(), 0.0);
}

void ParamTensors::check_shapes(const ModelDims& dims) const {
  const auto expected = zeros(dims).tensors();
  const auto actual = tensors();
  for (std::size_t i = 0; i < kTensorCount; ++i) {
    if (expected[i].rows != actual[i].rows || expected[i].cols != actual[i].cols) {
      throw ShapeError("tensor " + std::string(actual[i].name) + " is " +
                       std::to_string(actual[i].rows) + "x" + std::to_string(actual[i].cols) +
                       ", expected " + std::to_string(expected[i].rows) + "x" +
                       std::to_string(expected[i].cols));
    }
  }
}

std::uint64_t ModelParams::fingerprint() const noexcept {
  std::uint64_t h = 0x9E3779B97F4A7C15ULL;
  for (const auto& t : tensors()) {
    for (double v : t.values) {
      h ^= std::bit_cast<std::uint64_t>(v) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    }
  }
  return h;
}

ParamGrads ParamGrads::zeros_like(const ModelParams& p) {
  ParamGrads g;
  static_cast<ParamTensors&>(g) = ParamTensors::zeros(p.dims);
  return g;
}

ModelParams init_params(const ModelDims& dims, std::uint64_t seed) {
  dims.validate();
  ModelParams p;
  static_cast<ParamTensors&>(p) = ParamTensors::zeros(dims);
  p.dims = dims;
  SeededRng rng(seed);
  auto glorot = [&](Matrix& m, std::size_t fan_in, std::size_t fan_out) {
    m = init_uniform(m.rows(), m.cols(), std::sqrt(6.0 / double(fan_in + fan_out)), rng);
  };
  const auto H = dims.hidden_dim, D = dims.input_dim, K = dims.head_hidden;
  glorot(p.update_input, D, H);
  glorot(p.update_recurrent, H, H);
  glorot(p.reset_input, D, H);
  glorot(p.reset_recurrent, H, H);
  glorot(p.cand_input, D, H);
  glorot(p.cand_recurrent, H, H);
  glorot(p.attn_matrix, H, H);
  // the query is a vector; treat it as an H x 1 weight
  {
    const double a = std::sqrt(6.0 / double(H + 1));
    for (auto& v : p.attn_query) v = rng.uniform(-a, a);
  }
  glorot(p.head_hidden_weight, H, K);
  glorot(p.head_out_weight, K, 1);
  return p;
}

namespace {

void check_step_shapes(std::size_t x_len, std::size_t h_len, const ModelParams& p) {
  if (x_len != p.dims.input_dim || h_len != p.dims.hidden_dim) {
    throw ShapeError("gru step: got x of length " + std::to_string(x_len) + " and h of length " +
                     std::to_string(h_len) + ", model expects " +
                     std::to_string(p.dims.input_dim) + " and " +
                     std::to_string(p.dims.hidden_dim));
  }
}

// Core GRU step on raw spans. scratch must hold H doubles.
void gru_step(std::span<const double> x, std::span<const double> h_prev, const ModelParams& p,
              std::span<double> z, std::span<double> r, std::span<double> c,
              std::span<double> h, std::span<double> scratch) {
  const std::size_t H = p.dims.hidden_dim;
  for (std::size_t i = 0; i < H; ++i) {
    z[i] = p.update_bias[i];
    r[i] = p.reset_bias[i];
    c[i] = p.cand_bias[i];
  }
  matvec_accumulate(p.update_input, x, z);
  matvec_accumulate(p.update_recurrent, h_prev, z);
  matvec_accumulate(p.reset_input, x, r);
  matvec_accumulate(p.reset_recurrent, h_prev, r);
  for (std::size_t i = 0; i < H; ++i) {
    z[i] = sigmoid(z[i]);
    r[i] = sigmoid(r[i]);
    scratch[i] = r[i] * h_prev[i];
  }
  matvec_accumulate(p.cand_input, x, c);
  matvec_accumulate(p.cand_recurrent, scratch, c);
  for (std::size_t i = 0; i < H; ++i) {
    c[i] = std::tanh(c[i]);
    h[i] = (1.0 - z[i]) * h_prev[i] + z[i] * c[i];
  }
}

}  // namespace

Vector gru_cell_forward(const Vector& x, const Vector& h_prev, const ModelParams& p,
                        GruCellCache* cache) {
  check_step_shapes(x.size(), h_prev.size(), p);
  const std::size_t H = p.dims.hidden_dim;
  Vector z(H), r(H), c(H), h(H), scratch(H);
  gru_step(x.span(), h_prev.span(), p, z.span(), r.span(), c.span(), h.span(), scratch.span());
  if (cache != nullptr) *cache = GruCellCache{std::move(z), std::move(r), std::move(c)};
  return h;
}

SequenceOutput gru_sequence_forward(const Matrix& window, const ModelParams& p) {
  if (window.rows() == 0) throw ShapeError("gru_sequence_forward: window has no time steps");
  check_step_shapes(window.cols(), p.dims.hidden_dim, p);
  const std::size_t T = window.rows(), H = p.dims.hidden_dim;
  SequenceOutput out{Matrix(T, H), Matrix(T, H), Matrix(T, H), Matrix(T, H)};
  Vector zero(H), scratch(H);
  for (std::size_t t = 0; t < T; ++t) {
    std::span<const double> h_prev = t == 0 ? zero.span() : out.hidden.row(t - 1);
    gru_step(window.row(t), h_prev, p, out.update.row(t), out.reset.row(t),
             out.candidate.row(t), out.hidden.row(t), scratch.span());
  }
  return out;
}

AttentionOutput attention_pool(const Matrix& hidden, const Matrix& attn_matrix,
                               const Vector& attn_query) {
  if (hidden.rows() == 0) throw ShapeError("attention_pool: no hidden states");
  const std::size_t H = hidden.cols();
  if (attn_matrix.rows() != H || attn_matrix.cols() != attn_query.size()) {
    throw ShapeError("attention_pool: attention matrix " + std::to_string(attn_matrix.rows()) +
                     "x" + std::to_string(attn_matrix.cols()) + " incompatible with hidden width " +
                     std::to_string(H) + " and query length " +
                     std::to_string(attn_query.size()));
  }
  AttentionOutput out;
  out.key = matvec(attn_matrix, attn_query);
  out.scores = Vector(hidden.rows());
  for (std::size_t t = 0; t < hidden.rows(); ++t) out.scores[t] = dot(hidden.row(t), out.key.span());
  out.weights = stable_softmax(out.scores);
  out.context = Vector(H);
  for (std::size_t t = 0; t < hidden.rows(); ++t) {
    const auto row = hidden.row(t);
    for (std::size_t i = 0; i < H; ++i) out.context[i] += out.weights[t] * row[i];
  }
  return out;
}

Vector mean_pool(const Matrix& hidden) {
  if (hidden.rows() == 0) throw ShapeError("mean_pool: no hidden states");
  Vector s(hidden.cols());
  for (std::size_t t = 0; t < hidden.rows(); ++t) {
    const auto row = hidden.row(t);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += row[i];
  }
  const double inv = 1.0 / double(hidden.rows());
  for (auto& v : s) v *= inv;
  return s;
}

HeadOutput head_forward_full(const Vector& context, const ModelParams& p) {
  if (context.size() != p.dims.hidden_dim) {
    throw ShapeError("head_forward: context has length " + std::to_string(context.size()) +
                     ", expected " + std::to_string(p.dims.hidden_dim));
  }
  HeadOutput out;
  out.hidden = Vector(p.head_hidden_bias.values());
  matvec_accumulate(p.head_hidden_weight, context.span(), out.hidden.span());
  for (auto& v : out.hidden) v = std::tanh(v);
  out.logit = p.head_out_bias[0] + dot(p.head_out_weight.row(0), out.hidden.span());
  out.probability = sigmoid(out.logit);
  return out;
}

double head_forward(const Vector& context, const ModelParams& p) {
  return head_forward_full(context, p).probability;
}

namespace {

void check_window(const Matrix& window, const ModelParams& p) {
  if (window.rows() == 0 || window.cols() != p.dims.input_dim) {
    throw ShapeError("window is " + std::to_string(window.rows()) + "x" +
                     std::to_string(window.cols()) + ", model expects T x " +
                     std::to_string(p.dims.input_dim));
  }
}

AttentionOutput uniform_pool(const Matrix& hidden) {
  AttentionOutput out;
  const std::size_t T = hidden.rows();
  out.context = mean_pool(hidden);
  out.weights = Vector(T, 1.0 / double(T));
  out.scores = Vector(T);
  return out;
}

}  // namespace

ForwardResult model_forward(const Matrix& window, const ModelParams& p, Pooling pooling) {
  check_window(window, p);
  ForwardTrace trace;
  trace.pooling = pooling;
  trace.input = window;
  trace.sequence = gru_sequence_forward(window, p);
  trace.attention = pooling == Pooling::kAttention
                        ? attention_pool(trace.sequence.hidden, p.attn_matrix, p.attn_query)
                        : uniform_pool(trace.sequence.hidden);
  trace.head = head_forward_full(trace.attention.context, p);
  trace.params_fingerprint = p.fingerprint();
  const double prob = trace.head.probability;
  Vector weights = trace.attention.weights;
  return ForwardResult{prob, std::move(weights), std::move(trace)};
}

double model_predict(const Matrix& window, const ModelParams& p, Pooling pooling) {
  check_window(window, p);
  const SequenceOutput seq = gru_sequence_forward(window, p);
  const Vector context = pooling == Pooling::kAttention
                             ? attention_pool(seq.hidden, p.attn_matrix, p.attn_query).context
                             : mean_pool(seq.hidden);
  return head_forward(context, p);
}

void model_backward_accumulate(const ForwardTrace& trace, double dloss_dprob,
                               const ModelParams& p, ParamTensors& g) {
  if (trace.params_fingerprint != p.fingerprint()) {
    throw ContractError("model_backward: trace was produced with different parameters");
  }
  const std::size_t T = trace.input.rows(), H = p.dims.hidden_dim, K = p.dims.head_hidden;
  if (trace.sequence.hidden.rows() != T || trace.sequence.hidden.cols() != H ||
      trace.head.hidden.size() != K) {
    throw ContractError("model_backward: trace shapes do not match parameters");
  }

  // head
  const double prob = trace.head.probability;
  const double dlogit = dloss_dprob * prob * (1.0 - prob);
  g.head_out_bias[0] += dlogit;
  Vector dpre(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double u = trace.head.hidden[k];
    g.head_out_weight(0, k) += dlogit * u;
    dpre[k] = dlogit * p.head_out_weight(0, k) * (1.0 - u * u);
    g.head_hidden_bias[k] += dpre[k];
  }
  const Vector& context = trace.attention.context;
  outer_accumulate(g.head_hidden_weight, dpre.span(), context.span());
  Vector dcontext(H);
  matvec_t_accumulate(p.head_hidden_weight, dpre.span(), dcontext.span());

  // pooling -> gradient w.r.t. each hidden state
  const Matrix& hidden = trace.sequence.hidden;
  Matrix dhidden(T, H);
  if (trace.pooling == Pooling::kAttention) {
    const Vector& alpha = trace.attention.weights;
    const Vector& key = trace.attention.key;
    Vector dalpha(T);
    double weighted = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      dalpha[t] = dot(hidden.row(t), dcontext.span());
      weighted += alpha[t] * dalpha[t];
    }
    Vector dkey(H);
    for (std::size_t t = 0; t < T; ++t) {
      const double dscore = alpha[t] * (dalpha[t] - weighted);
      const auto h = hidden.row(t);
      auto dh = dhidden.row(t);
      for (std::size_t i = 0; i < H; ++i) {
        dh[i] = alpha[t] * dcontext[i] + dscore * key[i];
        dkey[i] += dscore * h[i];
      }
    }
    outer_accumulate(g.attn_matrix, dkey.span(), p.attn_query.span());
    matvec_t_accumulate(p.attn_matrix, dkey.span(), g.attn_query.span());
  } else {
    const double inv = 1.0 / double(T);
    for (std::size_t t = 0; t < T; ++t) {
      auto dh = dhidden.row(t);
      for (std::size_t i = 0; i < H; ++i) dh[i] = dcontext[i] * inv;
    }
  }

  // backpropagation through time
  Vector carry(H), dh(H), dcand_pre(H), dupd_pre(H), drst_pre(H), dgated(H), gated(H),
      zero(H);
  for (std::size_t step = T; step-- > 0;) {
    const auto x = trace.input.row(step);
    const auto z = trace.sequence.update.row(step);
    const auto r = trace.sequence.reset.row(step);
    const auto c = trace.sequence.candidate.row(step);
    std::span<const double> h_prev = step == 0 ? zero.span() : hidden.row(step - 1);
    const auto dh_pool = dhidden.row(step);
    for (std::size_t i = 0; i < H; ++i) {
      dh[i] = dh_pool[i] + carry[i];
      dcand_pre[i] = dh[i] * z[i] * (1.0 - c[i] * c[i]);
      dupd_pre[i] = dh[i] * (c[i] - h_prev[i]) * z[i] * (1.0 - z[i]);
      carry[i] = dh[i] * (1.0 - z[i]);
      gated[i] = r[i] * h_prev[i];
      dgated[i] = 0.0;
    }
    outer_accumulate(g.cand_input, dcand_pre.span(), x);
    outer_accumulate(g.cand_recurrent, dcand_pre.span(), gated.span());
    matvec_t_accumulate(p.cand_recurrent, dcand_pre.span(), dgated.span());
    for (std::size_t i = 0; i < H; ++i) {
      g.cand_bias[i] += dcand_pre[i];
      g.update_bias[i] += dupd_pre[i];
      drst_pre[i] = dgated[i] * h_prev[i] * r[i] * (1.0 - r[i]);
      g.reset_bias[i] += drst_pre[i];
      carry[i] += dgated[i] * r[i];
    }
    outer_accumulate(g.update_input, dupd_pre.span(), x);
    outer_accumulate(g.reset_input, drst_pre.span(), x);
    if (step > 0) {
      outer_accumulate(g.update_recurrent, dupd_pre.span(), h_prev);
      outer_accumulate(g.reset_recurrent, drst_pre.span(), h_prev);
    }
    matvec_t_accumulate(p.update_recurrent, dupd_pre.span(), carry.span());
    matvec_t_accumulate(p.reset_recurrent, drst_pre.span(), carry.span());
  }
}

ParamGrads model_backward(const ForwardTrace& trace, double dloss_dprob, const ModelParams& p) {
  ParamGrads g = ParamGrads::zeros_like(p);
  model_backward_accumulate(trace, dloss_dprob, p, g);
  return g;
}

}  // namespace faultpred
