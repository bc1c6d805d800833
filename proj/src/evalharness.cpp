#include "faultpred/evalharness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "faultpred/errors.hpp"
#include "faultpred/kernels.hpp"

namespace faultpred {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("metrics: " + std::to_string(scores.size()) + " scores but " +
                     std::to_string(labels.size()) + " labels");
  }
  if (scores.empty()) throw DataError("metrics: no samples");
  for (int y : labels) {
    if (y != 0 && y != 1) throw DataError("metrics: labels must be 0 or 1");
  }
}

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

ThresholdMetrics accuracy_f1(std::span<const double> scores, std::span<const int> labels,
                             double threshold) {
  check_inputs(scores, labels);
  ThresholdMetrics m;
  auto& c = m.confusion;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      predicted ? ++c.tp : ++c.fn;
    } else {
      predicted ? ++c.fp : ++c.tn;
    }
  }
  m.accuracy = double(c.tp + c.tn) / double(c.total());
  m.precision = c.tp + c.fp > 0 ? double(c.tp) / double(c.tp + c.fp) : 0.0;
  m.recall = c.tp + c.fn > 0 ? double(c.tp) / double(c.tp + c.fn) : 0.0;
  m.f1 = c.tp == 0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // sum of (doubled) mid-ranks of the positives
  std::uint64_t rank_sum_x2 = 0, pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const std::uint64_t mid_x2 = (i + 1) + j;  // ranks i+1..j averaged, times 2
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum_x2 += mid_x2;
        ++pos;
      }
    }
    i = j;
  }
  const std::uint64_t neg = n - pos;
  if (pos == 0 || neg == 0) {
    throw DataError("auc needs both classes; got " + std::to_string(pos) + " positive and " +
                    std::to_string(neg) + " negative samples");
  }
  // U = R - pos(pos+1)/2, all doubled to stay in integers
  const std::uint64_t u_x2 = rank_sum_x2 - pos * (pos + 1);
  return double(u_x2) / (2.0 * double(pos) * double(neg));
}

Evaluation evaluate(const ModelParams& params, Pooling pooling, const WindowedDataset& ds,
                    Split split, double threshold) {
  if (ds.window_len != params.dims.window_len || ds.feature_count() != params.dims.input_dim) {
    throw ShapeError("dataset windows are " + std::to_string(ds.window_len) + "x" +
                     std::to_string(ds.feature_count()) + " but the model expects " +
                     std::to_string(params.dims.window_len) + "x" +
                     std::to_string(params.dims.input_dim));
  }
  const auto idx = ds.indices(split);
  if (idx.empty()) throw DataError(std::string("the ") + to_string(split) + " split is empty");
  Evaluation ev;
  ev.scores = kernels::score_windows_parallel(params, pooling, ds.windows, idx);
  ev.labels.reserve(idx.size());
  for (auto i : idx) ev.labels.push_back(ds.windows[i].label);

  const auto tm = accuracy_f1(ev.scores, ev.labels, threshold);
  auto& r = ev.report;
  r.pooling = std::string(to_string(pooling));
  r.accuracy = tm.accuracy;
  r.f1 = tm.f1;
  const bool both = tm.confusion.tp + tm.confusion.fn > 0 && tm.confusion.tn + tm.confusion.fp > 0;
  r.auc = both ? auc(ev.scores, ev.labels) : std::numeric_limits<double>::quiet_NaN();
  r.confusion = tm.confusion;
  r.threshold = threshold;
  r.n = idx.size();
  return ev;
}

AblationReport ablation_run(const WindowedDataset& ds, const TrainConfig& cfg, double threshold,
                            const EpochCallback& on_epoch) {
  AblationReport rep;
  TrainConfig arm = cfg;
  arm.pooling = Pooling::kAttention;
  rep.attention.training = train(ds, arm, on_epoch);
  rep.attention.evaluation =
      evaluate(rep.attention.training.params, arm.pooling, ds, Split::kTest, threshold);
  arm.pooling = Pooling::kMean;
  rep.mean.training = train(ds, arm, on_epoch);
  rep.mean.evaluation = evaluate(rep.mean.training.params, arm.pooling, ds, Split::kTest, threshold);

  const auto& a = rep.attention.evaluation.report;
  const auto& m = rep.mean.evaluation.report;
  rep.delta_accuracy = a.accuracy - m.accuracy;
  rep.delta_f1 = a.f1 - m.f1;
  rep.delta_auc = a.auc - m.auc;
  return rep;
}

void write_metrics_csv(std::span<const MetricsReport> reports, std::ostream& out) {
  out << "pooling,accuracy,f1,auc,tp,fp,tn,fn,threshold,n\n";
  for (const auto& r : reports) {
    out << r.pooling << ',' << format_real(r.accuracy) << ',' << format_real(r.f1) << ','
        << format_real(r.auc) << ',' << r.confusion.tp << ',' << r.confusion.fp << ','
        << r.confusion.tn << ',' << r.confusion.fn << ',' << format_real(r.threshold) << ','
        << r.n << '\n';
  }
}

std::vector<MetricsReport> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "pooling,accuracy,f1,auc,tp,fp,tn,fn,threshold,n") {
    throw FormatError("metrics csv: unexpected header");
  }
  std::vector<MetricsReport> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 10) throw FormatError("metrics csv: bad row '" + line + "'");
    auto num = [&](const std::string& s, auto& v) {
      const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
      if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
        if (s == "nan" || s == "-nan") {
          if constexpr (std::is_floating_point_v<std::remove_reference_t<decltype(v)>>) {
            v = std::numeric_limits<double>::quiet_NaN();
            return;
          }
        }
        throw FormatError("metrics csv: bad number '" + s + "'");
      }
    };
    MetricsReport r;
    r.pooling = f[0];
    num(f[1], r.accuracy);
    num(f[2], r.f1);
    num(f[3], r.auc);
    num(f[4], r.confusion.tp);
    num(f[5], r.confusion.fp);
    num(f[6], r.confusion.tn);
    num(f[7], r.confusion.fn);
    num(f[8], r.threshold);
    num(f[9], r.n);
    out.push_back(std::move(r));
  }
  return out;
}

void emit_report(std::span<const MetricsReport> reports, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_metrics_csv(reports, out);
  if (!out) throw IoError("error while writing '" + path + "'");
}

void emit_loss_curve(const LossHistory& history, const std::string& path) {
  write_loss_csv(history, path);
}

}  // namespace faultpred
