#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "faultpred/datapipe.hpp"

namespace faultpred {

/// Knobs of the synthetic multi-node telemetry scenario.
struct ScenarioConfig {
  std::size_t node_count = 50;
  std::int64_t duration = 7 * 86400;  // seconds
  std::int64_t step = kDefaultStepSeconds;
  std::int64_t grid_start = 1'699'999'800;  // epoch seconds, multiple of 300
  double fault_rate = 0.3;                  // probability of a fault per node-day
  std::size_t precursor_length = 6;         // steps
  // The precursor starts this many steps before the fault, drawn uniformly
  // per fault. Must be >= precursor_length so it ends before the fault.
  std::size_t precursor_offset_min = 17;
  std::size_t precursor_offset_max = 23;
  double missing_rate = 0.01;
  std::array<double, kFeatureCount> noise_std = {0.05, 0.03, 5.0, 3.0};
  // precursor signature: linear ramps on cpu/mem, alternating disk_io swing
  double ramp_cpu = 0.15;
  double ramp_mem = 0.06;
  double disk_oscillation = 12.0;
  std::uint64_t seed = 7;
  // windowing the data is meant for; used for validation and describe()
  std::size_t window_len = 48;
  std::size_t stride = 12;
  std::int64_t horizon = 3600;

  std::size_t rows_per_node() const;
  /// Throws ConfigError (including when no window fits in a node's series).
  void validate() const;
};

struct GeneratedFault {
  FaultEvent event;
  std::size_t fault_row = 0;
  std::size_t precursor_offset = 0;  // steps from precursor start to fault
};

struct GeneratedData {
  std::string telemetry_csv;  // timestamp,node_id,cpu,mem,disk_io,net
  std::string events_csv;     // node_id,fault_time
  std::string manifest;       // key=value config echo plus one line per fault
  std::vector<GeneratedFault> faults;
};

/// Deterministic in cfg.seed. Nodes are generated independently from
/// per-node child streams and emitted in node order.
GeneratedData generate(const ScenarioConfig& cfg);

std::string node_name(std::size_t index);

struct ScenarioSummary {
  std::size_t rows_per_node = 0;
  std::size_t total_rows = 0;
  double expected_faults = 0.0;
  double expected_windows = 0.0;
  double expected_positives = 0.0;
  double positive_fraction = 0.0;

  std::string to_text() const;
};

ScenarioSummary describe(const ScenarioConfig& cfg);

/// Hand-written detector used to check a scenario is learnable: the largest
/// precursor-length moving average of cpu minus the window's mean cpu.
double precursor_rule_score(const Matrix& window, std::size_t precursor_length);

}  // namespace faultpred
