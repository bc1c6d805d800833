#include "faultpred/training.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "faultpred/errors.hpp"
#include "faultpred/kernels.hpp"

namespace faultpred {

LossValue weighted_ce(double prob, int label, const ClassWeights& w) {
  if (!(w.positive > 0.0) || !(w.negative > 0.0)) {
    throw ConfigError("class weights must be positive");
  }
  const double p = std::clamp(prob, kProbClamp, 1.0 - kProbClamp);
  if (label == 1) return {-w.positive * std::log(p), -w.positive / p};
  return {-w.negative * std::log1p(-p), w.negative / (1.0 - p)};
}

ClassWeights class_weights(std::span<const int> labels) {
  std::size_t pos = 0;
  for (int y : labels) pos += y == 1 ? 1 : 0;
  const std::size_t n = labels.size(), neg = n - pos;
  if (pos == 0 || neg == 0) {
    throw DataError("class weights need both classes; got " + std::to_string(pos) +
                    " positive and " + std::to_string(neg) + " negative samples");
  }
  return {double(n) / (2.0 * double(pos)), double(n) / (2.0 * double(neg))};
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be positive");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("adam eps must be positive");
  if (hidden_dim < 1 || head_hidden < 1) throw ConfigError("hidden sizes must be >= 1");
  if (class_weights && (!(class_weights->positive > 0.0) || !(class_weights->negative > 0.0))) {
    throw ConfigError("explicit class weights must be positive");
  }
}

namespace {

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void check_finite_grads(const ParamTensors& g) {
  for (const auto& t : g.tensors()) {
    if (!all_finite(t.values)) {
      throw NumericError("non-finite gradient in tensor " + std::string(t.name));
    }
  }
}

}  // namespace

void write_loss_csv(const LossHistory& history, std::ostream& out) {
  out << "epoch,train_loss,val_loss\n";
  for (const auto& e : history) {
    out << e.epoch << ',' << format_real(e.train_loss) << ',' << format_real(e.val_loss) << '\n';
  }
}

void write_loss_csv(const LossHistory& history, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_loss_csv(history, out);
  if (!out) throw IoError("error while writing '" + path + "'");
}

LossHistory read_loss_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "epoch,train_loss,val_loss") {
    throw FormatError("loss csv: missing 'epoch,train_loss,val_loss' header");
  }
  LossHistory h;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b, c;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    std::getline(ss, c);
    EpochLoss e;
    const auto ok = [](const std::string& s, auto& v) {
      const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
      return r.ec == std::errc() && r.ptr == s.data() + s.size();
    };
    if (!ok(a, e.epoch) || !ok(b, e.train_loss) || !ok(c, e.val_loss)) {
      throw FormatError("loss csv: bad row '" + line + "'");
    }
    h.push_back(e);
  }
  return h;
}

AdamState AdamState::zeros_like(const ModelParams& p) {
  return AdamState{ParamTensors::zeros(p.dims), ParamTensors::zeros(p.dims), 0};
}

void adam_step(ModelParams& p, const ParamTensors& grads, AdamState& state,
               const TrainConfig& cfg) {
  check_finite_grads(grads);
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, double(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, double(state.step));
  auto params = p.tensors();
  const auto g = grads.tensors();
  auto m = state.first_moment.tensors();
  auto v = state.second_moment.tensors();
  for (std::size_t t = 0; t < kTensorCount; ++t) {
    for (std::size_t i = 0; i < params[t].values.size(); ++i) {
      const double gi = g[t].values[i];
      double& mi = m[t].values[i];
      double& vi = v[t].values[i];
      mi = cfg.beta1 * mi + (1.0 - cfg.beta1) * gi;
      vi = cfg.beta2 * vi + (1.0 - cfg.beta2) * gi * gi;
      params[t].values[i] -= cfg.learning_rate * (mi / c1) / (std::sqrt(vi / c2) + cfg.adam_eps);
    }
  }
}

void sgd_step(ModelParams& p, const ParamTensors& grads, const TrainConfig& cfg) {
  check_finite_grads(grads);
  auto params = p.tensors();
  const auto g = grads.tensors();
  for (std::size_t t = 0; t < kTensorCount; ++t) {
    for (std::size_t i = 0; i < params[t].values.size(); ++i) {
      params[t].values[i] -= cfg.learning_rate * g[t].values[i];
    }
  }
}

double mean_loss(const ModelParams& p, Pooling pooling, std::span<const Window> windows,
                 std::span<const std::size_t> selection, const ClassWeights& w) {
  if (selection.empty()) throw DataError("mean_loss: no windows selected");
  const auto scores = kernels::score_windows_parallel(p, pooling, windows, selection);
  double total = 0.0;
  for (std::size_t i = 0; i < selection.size(); ++i) {
    total += weighted_ce(scores[i], windows[selection[i]].label, w).loss;
  }
  return total / double(selection.size());
}

TrainResult train(const WindowedDataset& ds, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  auto train_idx = ds.indices(Split::kTrain);
  const auto val_idx = ds.indices(Split::kVal);
  if (train_idx.empty()) throw DataError("train split is empty");
  if (val_idx.empty()) throw DataError("val split is empty");

  std::vector<int> labels;
  labels.reserve(train_idx.size());
  for (auto i : train_idx) labels.push_back(ds.windows[i].label);
  const std::size_t pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (pos == 0 || pos == labels.size()) {
    throw DataError("train split contains only " + std::string(pos == 0 ? "negative" : "positive") +
                    " windows (" + std::to_string(labels.size()) +
                    "); both classes are required");
  }

  TrainResult result;
  result.weights = cfg.class_weights ? *cfg.class_weights : class_weights(labels);

  ModelDims dims;
  dims.input_dim = ds.feature_count();
  dims.window_len = ds.window_len;
  dims.hidden_dim = cfg.hidden_dim;
  dims.head_hidden = cfg.head_hidden;
  ModelParams params = init_params(dims, cfg.seed);
  AdamState adam = AdamState::zeros_like(params);
  SeededRng shuffle_rng = SeededRng(cfg.seed).fork(0x5348);

  const std::span<const Window> windows(ds.windows);
  double best_val = std::numeric_limits<double>::infinity();
  result.params = params;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = train_idx.size(); i > 1; --i) {
      std::swap(train_idx[i - 1], train_idx[shuffle_rng.below(i)]);
    }
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < train_idx.size(); start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, train_idx.size() - start);
      const std::span<const std::size_t> batch(train_idx.data() + start, len);
      auto bg = kernels::batch_gradients_parallel(params, cfg.pooling, windows, batch,
                                                  result.weights);
      const double inv = 1.0 / double(len);
      for (auto& t : bg.grad_sum.tensors()) {
        for (auto& v : t.values) v *= inv;
      }
      if (cfg.optimizer == OptimizerKind::kAdam) {
        adam_step(params, bg.grad_sum, adam, cfg);
      } else {
        sgd_step(params, bg.grad_sum, cfg);
      }
      loss_sum += bg.loss_sum;
    }
    EpochLoss e;
    e.epoch = epoch;
    e.train_loss = loss_sum / double(train_idx.size());
    e.val_loss = mean_loss(params, cfg.pooling, windows, val_idx, result.weights);
    if (!std::isfinite(e.train_loss) || !std::isfinite(e.val_loss)) {
      throw NumericError("loss became non-finite at epoch " + std::to_string(epoch));
    }
    result.history.push_back(e);
    if (e.val_loss < best_val) {
      best_val = e.val_loss;
      result.params = params;
      result.best_epoch = epoch;
    }
    if (on_epoch) on_epoch(e);
  }
  return result;
}

double GradCheckReport::max_error() const {
  double worst = 0.0;
  for (const auto& t : tensors) worst = std::max(worst, t.relative_error);
  return worst;
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(diff) / (l2_norm(a) + l2_norm(b) + 1e-12);
}

GradCheckReport gradient_check(const ModelDims& dims, std::uint64_t seed,
                               const GradCheckOptions& opts) {
  dims.validate();
  ModelParams params = init_params(dims, seed);
  SeededRng rng = SeededRng(seed).fork(0x4743);
  // nonzero biases so every term of the backward pass is exercised
  for (Vector* b : {&params.update_bias, &params.reset_bias, &params.cand_bias,
                    &params.head_hidden_bias, &params.head_out_bias}) {
    for (auto& v : *b) v = rng.uniform(-0.5, 0.5);
  }
  Matrix window(dims.window_len, dims.input_dim);
  for (auto& v : window.span()) v = rng.normal();
  const int label = rng.bernoulli(0.5) ? 1 : 0;

  const auto fwd = model_forward(window, params, opts.pooling);
  const auto lv = weighted_ce(fwd.probability, label, opts.weights);
  ParamGrads analytic = model_backward(fwd.trace, lv.dloss_dprob, params);
  if (opts.corrupt) opts.corrupt(analytic);

  GradCheckReport report;
  report.tolerance = opts.tolerance;
  const auto analytic_views = analytic.tensors();
  for (std::size_t t = 0; t < kTensorCount; ++t) {
    const auto original = params.tensors()[t];
    const Vector start(std::vector<double>(original.values.begin(), original.values.end()));
    ModelParams probe = params;
    auto objective = [&](const Vector& flat) {
      auto view = probe.tensors()[t];
      std::copy(flat.begin(), flat.end(), view.values.begin());
      return weighted_ce(model_predict(window, probe, opts.pooling), label, opts.weights).loss;
    };
    const Vector numeric = finite_diff_grad(objective, start, opts.eps);
    const auto a = analytic_views[t].values;
    report.tensors.push_back({std::string(original.name), relative_error(a, numeric.span()),
                              l2_norm(a), l2_norm(numeric.span())});
  }
  return report;
}

}  // namespace faultpred
