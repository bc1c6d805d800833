#include "faultpred/synthgen.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "faultpred/errors.hpp"

namespace faultpred {

namespace {

constexpr std::int64_t kDay = 86400;

// baseline level and diurnal amplitude per feature
constexpr std::array<double, kFeatureCount> kBaseLevel = {0.40, 0.55, 40.0, 20.0};
constexpr std::array<double, kFeatureCount> kDiurnalAmp = {0.15, 0.05, 10.0, 6.0};
constexpr std::array<double, kFeatureCount> kNodeSpread = {0.05, 0.05, 5.0, 3.0};

void append_fixed(std::string& out, double v) {
  char buf[48];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 6);
  out.append(buf, res.ptr);
}

struct NodeOutput {
  std::string csv;
  std::vector<GeneratedFault> faults;
};

NodeOutput generate_node(const ScenarioConfig& cfg, std::size_t node) {
  SeededRng rng = SeededRng(cfg.seed).fork(node);
  const std::string name = node_name(node);
  const std::size_t rows = cfg.rows_per_node();
  const std::size_t steps_per_day = static_cast<std::size_t>(kDay / cfg.step);

  std::array<double, kFeatureCount> offset{};
  for (std::size_t f = 0; f < kFeatureCount; ++f) offset[f] = kNodeSpread[f] * rng.normal();
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

  // one Bernoulli trial per node-day (partial last day scaled)
  NodeOutput out;
  const std::size_t first_allowed = cfg.precursor_offset_max;
  for (std::size_t day_start = 0; day_start < rows; day_start += steps_per_day) {
    const std::size_t day_end = std::min(rows, day_start + steps_per_day);
    const double fraction = double(day_end - day_start) / double(steps_per_day);
    const bool hit = rng.bernoulli(cfg.fault_rate * fraction);
    const std::size_t lo = std::max(day_start, first_allowed);
    const std::size_t row = lo + rng.below(day_end > lo ? day_end - lo : 1);
    const std::size_t off =
        cfg.precursor_offset_min + rng.below(cfg.precursor_offset_max - cfg.precursor_offset_min + 1);
    if (!hit || lo >= day_end) continue;
    GeneratedFault gf;
    gf.event.node_id = name;
    gf.event.fault_time = cfg.grid_start + static_cast<std::int64_t>(row) * cfg.step;
    gf.fault_row = row;
    gf.precursor_offset = off;
    out.faults.push_back(gf);
  }

  Matrix values(rows, kFeatureCount);
  for (std::size_t i = 0; i < rows; ++i) {
    const double t = double(cfg.grid_start % kDay + static_cast<std::int64_t>(i) * cfg.step);
    const double angle = 2.0 * std::numbers::pi * t / double(kDay) + phase;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      const double diurnal = kDiurnalAmp[f] * std::sin(angle + 0.5 * double(f));
      values(i, f) = kBaseLevel[f] + offset[f] + diurnal + cfg.noise_std[f] * rng.normal();
    }
  }
  const double len = double(cfg.precursor_length);
  for (const auto& gf : out.faults) {
    const std::size_t start = gf.fault_row - gf.precursor_offset;
    for (std::size_t j = 0; j < cfg.precursor_length; ++j) {
      const double ramp = double(j + 1) / len;
      values(start + j, 0) += cfg.ramp_cpu * ramp;
      values(start + j, 1) += cfg.ramp_mem * ramp;
      values(start + j, 2) += cfg.disk_oscillation * (j % 2 == 0 ? 1.0 : -1.0);
    }
  }

  out.csv.reserve(rows * 64);
  for (std::size_t i = 0; i < rows; ++i) {
    out.csv += std::to_string(cfg.grid_start + static_cast<std::int64_t>(i) * cfg.step);
    out.csv += ',';
    out.csv += name;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      out.csv += ',';
      if (cfg.missing_rate > 0.0 && rng.bernoulli(cfg.missing_rate)) continue;
      append_fixed(out.csv, values(i, f));
    }
    out.csv += '\n';
  }
  return out;
}

}  // namespace

std::size_t ScenarioConfig::rows_per_node() const {
  if (step <= 0 || duration <= 0) return 0;
  return static_cast<std::size_t>(duration / step);
}

void ScenarioConfig::validate() const {
  if (node_count < 1) throw ConfigError("node_count must be >= 1");
  if (step <= 0) throw ConfigError("step must be positive");
  if (kDay % step != 0) throw ConfigError("step must divide one day (86400 s)");
  if (duration < step) throw ConfigError("duration must cover at least one step");
  if (grid_start <= 0) throw ConfigError("grid_start must be a positive epoch time");
  if (!(fault_rate >= 0.0 && fault_rate <= 1.0)) throw ConfigError("fault_rate must lie in [0,1]");
  if (!(missing_rate >= 0.0 && missing_rate <= 1.0)) {
    throw ConfigError("missing_rate must lie in [0,1]");
  }
  if (precursor_length < 1) throw ConfigError("precursor_length must be >= 1");
  if (precursor_offset_min < precursor_length) {
    throw ConfigError("precursor_offset_min must be >= precursor_length so the precursor ends "
                      "before the fault");
  }
  if (precursor_offset_max < precursor_offset_min) {
    throw ConfigError("precursor_offset_max must be >= precursor_offset_min");
  }
  for (double s : noise_std) {
    if (!(s >= 0.0)) throw ConfigError("noise_std entries must be >= 0");
  }
  if (window_len < 1 || stride < 1 || horizon <= 0) {
    throw ConfigError("window_len, stride and horizon must be positive");
  }
  if (rows_per_node() < window_len) {
    throw ConfigError("scenario yields " + std::to_string(rows_per_node()) +
                      " rows per node, fewer than window_len " + std::to_string(window_len) +
                      "; no window can be formed");
  }
  if (fault_rate > 0.0 && rows_per_node() <= precursor_offset_max) {
    throw ConfigError("series too short to hold a full precursor before any fault");
  }
}

std::string node_name(std::size_t index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 3) digits.insert(0, 3 - digits.size(), '0');
  return "node-" + digits;
}

GeneratedData generate(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::ptrdiff_t>(cfg.node_count);
  std::vector<NodeOutput> nodes(cfg.node_count);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) nodes[i] = generate_node(cfg, static_cast<std::size_t>(i));

  GeneratedData data;
  std::size_t bytes = 0;
  for (const auto& node : nodes) bytes += node.csv.size();
  data.telemetry_csv.reserve(bytes + 64);
  data.telemetry_csv = "timestamp,node_id,cpu,mem,disk_io,net\n";
  data.events_csv = "node_id,fault_time\n";
  for (auto& node : nodes) {
    data.telemetry_csv += node.csv;
    for (auto& f : node.faults) {
      data.events_csv += f.event.node_id + "," + std::to_string(f.event.fault_time) + "\n";
      data.faults.push_back(std::move(f));
    }
  }

  std::ostringstream m;
  m << "format_version=1\n"
    << "seed=" << cfg.seed << "\n"
    << "node_count=" << cfg.node_count << "\n"
    << "duration=" << cfg.duration << "\n"
    << "step=" << cfg.step << "\n"
    << "grid_start=" << cfg.grid_start << "\n"
    << "fault_rate=" << cfg.fault_rate << "\n"
    << "precursor_length=" << cfg.precursor_length << "\n"
    << "precursor_offset_min=" << cfg.precursor_offset_min << "\n"
    << "precursor_offset_max=" << cfg.precursor_offset_max << "\n"
    << "missing_rate=" << cfg.missing_rate << "\n"
    << "noise_std=" << cfg.noise_std[0] << ";" << cfg.noise_std[1] << ";" << cfg.noise_std[2]
    << ";" << cfg.noise_std[3] << "\n"
    << "ramp_cpu=" << cfg.ramp_cpu << "\n"
    << "ramp_mem=" << cfg.ramp_mem << "\n"
    << "disk_oscillation=" << cfg.disk_oscillation << "\n"
    << "rows_per_node=" << cfg.rows_per_node() << "\n"
    << "fault_count=" << data.faults.size() << "\n";
  for (const auto& f : data.faults) {
    m << "fault=" << f.event.node_id << "," << f.event.fault_time
      << ",precursor_offset=" << f.precursor_offset << "\n";
  }
  data.manifest = m.str();
  return data;
}

ScenarioSummary describe(const ScenarioConfig& cfg) {
  cfg.validate();
  ScenarioSummary s;
  s.rows_per_node = cfg.rows_per_node();
  s.total_rows = s.rows_per_node * cfg.node_count;
  const double days = double(cfg.duration) / double(kDay);
  s.expected_faults = double(cfg.node_count) * days * cfg.fault_rate;
  const double windows_per_node = double(window_count(s.rows_per_node, cfg.window_len, cfg.stride));
  // each fault removes the windows that contain it and labels the ones
  // ending within the horizon before it
  const double horizon_steps = double(cfg.horizon) / double(cfg.step);
  const double excluded_per_fault = double(cfg.window_len) / double(cfg.stride);
  const double positives_per_fault = horizon_steps / double(cfg.stride);
  s.expected_windows =
      std::max(0.0, double(cfg.node_count) * windows_per_node - s.expected_faults * excluded_per_fault);
  s.expected_positives = s.expected_faults * positives_per_fault;
  s.positive_fraction = s.expected_windows > 0 ? s.expected_positives / s.expected_windows : 0.0;
  return s;
}

std::string ScenarioSummary::to_text() const {
  std::ostringstream o;
  o << "rows per node:        " << rows_per_node << "\n"
    << "total rows:           " << total_rows << "\n"
    << "expected faults:      " << expected_faults << "\n"
    << "expected windows:     " << expected_windows << "\n"
    << "expected positives:   " << expected_positives << "\n"
    << "positive fraction:    " << positive_fraction << "\n"
    << "imbalance (neg:pos):  "
    << (expected_positives > 0 ? (expected_windows - expected_positives) / expected_positives : 0.0)
    << ":1\n";
  return o.str();
}

double precursor_rule_score(const Matrix& window, std::size_t precursor_length) {
  const std::size_t T = window.rows();
  if (T == 0 || window.cols() == 0) throw ShapeError("precursor_rule_score: empty window");
  const std::size_t len = std::max<std::size_t>(1, std::min(precursor_length, T));
  double total = 0.0;
  for (std::size_t t = 0; t < T; ++t) total += window(t, 0);
  const double mean = total / double(T);
  double run = 0.0, best = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < T; ++t) {
    run += window(t, 0);
    if (t >= len) run -= window(t - len, 0);
    if (t + 1 >= len) best = std::max(best, run / double(len));
  }
  return best - mean;
}

}  // namespace faultpred
