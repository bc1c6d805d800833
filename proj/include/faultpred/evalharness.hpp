#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "faultpred/datapipe.hpp"
#include "faultpred/model.hpp"
#include "faultpred/training.hpp"

namespace faultpred {

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct ThresholdMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Confusion confusion;
};

/// Predicts positive when score >= threshold. F1 is 0 when tp == 0.
/// Throws DataError on empty input, ShapeError on a length mismatch.
ThresholdMetrics accuracy_f1(std::span<const double> scores, std::span<const int> labels,
                             double threshold = 0.5);

/// Probability that a random positive outscores a random negative, ties
/// counting one half, from mid-ranks in O(n log n). Throws DataError unless
/// both classes are present.
double auc(std::span<const double> scores, std::span<const int> labels);

struct MetricsReport {
  std::string pooling;
  double accuracy = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
  Confusion confusion;
  double threshold = 0.5;
  std::size_t n = 0;
  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

struct Evaluation {
  MetricsReport report;
  std::vector<double> scores;
  std::vector<int> labels;
};

/// Scores every window of the split with read-only params and computes the
/// metrics over the pooled scores. AUC is NaN if the split has one class.
Evaluation evaluate(const ModelParams& params, Pooling pooling, const WindowedDataset& ds,
                    Split split, double threshold = 0.5);

struct AblationArm {
  TrainResult training;
  Evaluation evaluation;
};

struct AblationReport {
  AblationArm attention;
  AblationArm mean;
  double delta_accuracy = 0.0;  // attention minus mean
  double delta_f1 = 0.0;
  double delta_auc = 0.0;
};

/// Trains one attention and one mean-pooling model with otherwise identical
/// configuration and compares them on the test split.
AblationReport ablation_run(const WindowedDataset& ds, const TrainConfig& cfg,
                            double threshold = 0.5, const EpochCallback& on_epoch = {});

/// Header `pooling,accuracy,f1,auc,tp,fp,tn,fn,threshold,n`, one row per report.
void write_metrics_csv(std::span<const MetricsReport> reports, std::ostream& out);
std::vector<MetricsReport> read_metrics_csv(std::istream& in);

void emit_report(std::span<const MetricsReport> reports, const std::string& path);
void emit_loss_curve(const LossHistory& history, const std::string& path);

}  // namespace faultpred
