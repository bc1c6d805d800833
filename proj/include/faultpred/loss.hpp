#pragma once

#include <span>

namespace faultpred {

/// Per-class multipliers for the cross-entropy terms.
struct ClassWeights {
  double positive = 1.0;
  double negative = 1.0;
  friend bool operator==(const ClassWeights&, const ClassWeights&) = default;
};

struct LossValue {
  double loss;
  double dloss_dprob;
};

inline constexpr double kProbClamp = 1e-12;

/// loss = -[w+ y ln p + w- (1-y) ln(1-p)], p clamped to [1e-12, 1-1e-12].
/// Throws ConfigError for nonpositive weights.
LossValue weighted_ce(double prob, int label, const ClassWeights& w);

/// Inverse-frequency weights n / (2 n_c), so w+ n+ + w- n- = n.
/// Throws DataError when a class is absent.
ClassWeights class_weights(std::span<const int> labels);

}  // namespace faultpred
