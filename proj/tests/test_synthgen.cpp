#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "faultpred/datapipe.hpp"
#include "faultpred/errors.hpp"
#include "faultpred/evalharness.hpp"
#include "faultpred/synthgen.hpp"

using namespace faultpred;

namespace {

ScenarioConfig small_scenario(std::uint64_t seed = 7) {
  ScenarioConfig cfg;
  cfg.node_count = 6;
  cfg.duration = 3 * 86400;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("no faults and no missing values") {
  ScenarioConfig cfg = small_scenario();
  cfg.missing_rate = 0.0;
  cfg.fault_rate = 0.0;
  GeneratedData d = generate(cfg);
  CHECK(d.events_csv == "node_id,fault_time\n");
  CHECK(d.faults.empty());
  std::istringstream in(d.telemetry_csv);
  auto res = parse_telemetry(in);
  CHECK(res.errors.empty());
  CHECK(res.rows.size() == cfg.node_count * cfg.rows_per_node());
  for (const auto& r : res.rows)
    for (const auto& v : r.values) CHECK(v.has_value());
}

TEST_CASE("generation is byte deterministic") {
  ScenarioConfig cfg = small_scenario(99);
  GeneratedData a = generate(cfg), b = generate(cfg);
  CHECK(a.telemetry_csv == b.telemetry_csv);
  CHECK(a.events_csv == b.events_csv);
  CHECK(a.manifest == b.manifest);
  cfg.seed = 100;
  CHECK(generate(cfg).telemetry_csv != a.telemetry_csv);
}

TEST_CASE("fault count matches the per node-day trial expectation") {
  ScenarioConfig cfg;
  cfg.node_count = 20;
  cfg.duration = 5 * 86400;
  const double trials = double(cfg.node_count) * 5.0;
  const double mean = trials * cfg.fault_rate;
  const double sd = std::sqrt(trials * cfg.fault_rate * (1 - cfg.fault_rate));
  const int seeds = 40;
  double total = 0;
  for (int s = 0; s < seeds; ++s) {
    cfg.seed = 1000 + s;
    const double count = double(generate(cfg).faults.size());
    CHECK(std::abs(count - mean) <= 4 * sd);
    total += count;
  }
  CHECK(std::abs(total / seeds - mean) <= 3 * sd / std::sqrt(double(seeds)));
}

TEST_CASE("describe") {
  ScenarioConfig cfg;
  ScenarioSummary s = describe(cfg);
  CHECK(s.rows_per_node == 2016);
  CHECK(s.total_rows == 2016 * 50);
  CHECK(s.expected_faults == doctest::Approx(50 * 7 * 0.3));
  CHECK(s.to_text().find("2016") != std::string::npos);

  ScenarioConfig tiny;
  tiny.node_count = 1;
  tiny.duration = 3600;
  tiny.window_len = 4;
  tiny.stride = 1;
  tiny.precursor_offset_min = 6;
  tiny.precursor_offset_max = 6;
  CHECK(describe(tiny).rows_per_node == 12);
  CHECK(describe(tiny).total_rows == 12);
}

TEST_CASE("imbalance estimate matches generated labels") {
  ScenarioConfig cfg;
  GeneratedData d = generate(cfg);
  std::istringstream tin(d.telemetry_csv), ein(d.events_csv);
  auto recs = parse_telemetry(tin);
  auto evs = parse_fault_events(ein);
  CHECK(recs.errors.empty());
  CHECK(evs.errors.empty());
  std::size_t windows = 0, positives = 0;
  std::map<std::string, std::vector<TelemetryRecord>> by_node;
  for (auto& r : recs.rows) by_node[r.node_id].push_back(r);
  for (auto& [node, rs] : by_node) {
    auto ws = make_windows(interpolate_missing(align_to_grid(rs)), evs.rows, cfg.window_len,
                           cfg.stride, cfg.horizon);
    windows += ws.size();
    for (const auto& w : ws) positives += w.label;
  }
  const double observed = double(positives) / double(windows);
  const double estimate = describe(cfg).positive_fraction;
  CHECK(std::abs(observed - estimate) / estimate <= 0.2);
}

TEST_CASE("every precursor lies inside its series and before its fault") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    ScenarioConfig cfg = small_scenario(seed);
    cfg.fault_rate = 1.0;
    cfg.duration = 2 * 86400;
    GeneratedData d = generate(cfg);
    CHECK(d.faults.size() == cfg.node_count * 2);
    for (const auto& f : d.faults) {
      CHECK(f.precursor_offset >= cfg.precursor_offset_min);
      CHECK(f.precursor_offset <= cfg.precursor_offset_max);
      CHECK(f.precursor_offset >= cfg.precursor_length);
      CHECK(f.fault_row >= f.precursor_offset);
      CHECK(f.fault_row < cfg.rows_per_node());
      CHECK(f.event.fault_time == cfg.grid_start + std::int64_t(f.fault_row) * cfg.step);
      CHECK(d.manifest.find("fault=" + f.event.node_id + "," + std::to_string(f.event.fault_time)) !=
            std::string::npos);
    }
  }
}

TEST_CASE("precursor signature is visible in the raw series") {
  ScenarioConfig cfg = small_scenario(4);
  cfg.fault_rate = 1.0;
  cfg.missing_rate = 0.0;
  for (auto& s : cfg.noise_std) s = 0.0;
  ScenarioConfig quiet = cfg;
  quiet.fault_rate = 0.0;
  GeneratedData with = generate(cfg);
  // node streams draw the same random numbers either way, so the difference
  // of the two series is exactly the injected signature
  std::istringstream a(with.telemetry_csv);
  auto ra = parse_telemetry(a).rows;
  std::istringstream b(generate(quiet).telemetry_csv);
  auto rb = parse_telemetry(b).rows;
  REQUIRE(ra.size() == rb.size());
  const auto& f = with.faults.front();
  const std::size_t start = f.fault_row - f.precursor_offset;
  std::size_t node = 0;
  while (node_name(node) != f.event.node_id) ++node;
  const std::size_t base = node * cfg.rows_per_node();
  for (std::size_t j = 0; j < cfg.precursor_length; ++j) {
    const auto& x = ra[base + start + j];
    const auto& y = rb[base + start + j];
    const double ramp = double(j + 1) / double(cfg.precursor_length);
    CHECK(*x.values[0] - *y.values[0] == doctest::Approx(cfg.ramp_cpu * ramp).epsilon(1e-4));
    CHECK(*x.values[1] - *y.values[1] == doctest::Approx(cfg.ramp_mem * ramp).epsilon(1e-4));
    CHECK(std::abs(*x.values[2] - *y.values[2]) == doctest::Approx(cfg.disk_oscillation).epsilon(1e-6));
  }
  CHECK(*ra[base + start + cfg.precursor_length].values[0] ==
        *rb[base + start + cfg.precursor_length].values[0]);
}

TEST_CASE("missing values follow the configured rate") {
  ScenarioConfig cfg = small_scenario(5);
  cfg.missing_rate = 0.05;
  std::istringstream in(generate(cfg).telemetry_csv);
  auto rows = parse_telemetry(in).rows;
  std::size_t missing = 0;
  for (const auto& r : rows)
    for (const auto& v : r.values) missing += !v.has_value();
  const double rate = double(missing) / double(rows.size() * kFeatureCount);
  CHECK(std::abs(rate - 0.05) < 0.01);
}

TEST_CASE("a simple threshold rule detects the precursor") {
  ScenarioConfig cfg;
  GeneratedData d = generate(cfg);
  std::istringstream tin(d.telemetry_csv), ein(d.events_csv);
  auto recs = parse_telemetry(tin).rows;
  auto evs = parse_fault_events(ein).rows;
  PipelineConfig pc;
  WindowedDataset ds = build_dataset(recs, evs, pc);
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& w : ds.windows) {
    scores.push_back(precursor_rule_score(w.values, cfg.precursor_length));
    labels.push_back(w.label);
  }
  const double a = auc(scores, labels);
  MESSAGE("threshold rule AUC " << a);
  CHECK(a > 0.7);
}

TEST_CASE("invalid scenarios are rejected") {
  ScenarioConfig cfg;
  cfg.precursor_offset_min = 3;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ScenarioConfig{};
  cfg.precursor_offset_max = 10;
  CHECK_THROWS_AS(generate(cfg), ConfigError);
  cfg = ScenarioConfig{};
  cfg.duration = 3600;
  CHECK_THROWS_AS(generate(cfg), ConfigError);
  cfg = ScenarioConfig{};
  cfg.fault_rate = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ScenarioConfig{};
  cfg.node_count = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("node names") {
  CHECK(node_name(0) == "node-000");
  CHECK(node_name(42) == "node-042");
  CHECK(node_name(1234) == "node-1234");
}
