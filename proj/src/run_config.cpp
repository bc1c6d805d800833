#include "faultpred/run_config.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include "faultpred/errors.hpp"

namespace faultpred {

namespace {

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(text) +
                      "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v)) {
      throw ConfigError("config key '" + std::string(key) + "': value must be finite");
    }
  }
  return v;
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;

struct Entry {
  RunConfig::KeyInfo info;
  Setter set;
};

template <typename T, typename Field>
Entry num(std::string_view name, std::string_view help, Field field) {
  return {{name, help}, [field](RunConfig& c, std::string_view k, std::string_view v) {
            field(c) = parse_number<T>(k, v);
          }};
}

Entry str(std::string_view name, std::string_view help, std::string RunConfig::*member) {
  return {{name, help}, [member](RunConfig& c, std::string_view, std::string_view v) {
            c.*member = std::string(v);
          }};
}

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> e;
    e.push_back(num<std::uint64_t>("seed", "seed for generation, shuffling and initialization",
                                   [](RunConfig& c) -> auto& { return c.seed; }));
    e.push_back(str("out", "output directory", &RunConfig::out));
    e.push_back(str("telemetry", "telemetry CSV path", &RunConfig::telemetry));
    e.push_back(str("events", "fault events CSV path", &RunConfig::events));
    e.push_back(str("dataset", "windowed dataset file", &RunConfig::dataset));
    e.push_back(str("model", "model file", &RunConfig::model));
    e.push_back(str("window", "single-window CSV to score", &RunConfig::window));
    e.push_back({{"split", "split to evaluate (train|val|test)"},
                 [](RunConfig& c, std::string_view, std::string_view v) {
                   c.split = parse_split(std::string(v));
                 }});
    // scenario
    e.push_back(num<std::size_t>("nodes", "synthetic node count",
                                 [](RunConfig& c) -> auto& { return c.scenario.node_count; }));
    e.push_back(num<std::int64_t>("duration", "synthetic duration in seconds",
                                  [](RunConfig& c) -> auto& { return c.scenario.duration; }));
    e.push_back({{"step", "sampling step in seconds"},
                 [](RunConfig& c, std::string_view k, std::string_view v) {
                   c.scenario.step = c.pipeline.step = parse_number<std::int64_t>(k, v);
                 }});
    e.push_back(num<std::int64_t>("grid_start", "first synthetic timestamp",
                                  [](RunConfig& c) -> auto& { return c.scenario.grid_start; }));
    e.push_back(num<double>("fault_rate", "fault probability per node-day",
                            [](RunConfig& c) -> auto& { return c.scenario.fault_rate; }));
    e.push_back(num<std::size_t>("precursor_length", "precursor length in steps",
                                 [](RunConfig& c) -> auto& { return c.scenario.precursor_length; }));
    e.push_back(num<std::size_t>(
        "precursor_offset_min", "min steps from precursor start to fault",
        [](RunConfig& c) -> auto& { return c.scenario.precursor_offset_min; }));
    e.push_back(num<std::size_t>(
        "precursor_offset_max", "max steps from precursor start to fault",
        [](RunConfig& c) -> auto& { return c.scenario.precursor_offset_max; }));
    e.push_back(num<double>("missing_rate", "probability a metric field is blank",
                            [](RunConfig& c) -> auto& { return c.scenario.missing_rate; }));
    e.push_back(num<double>("noise_cpu", "cpu noise std",
                            [](RunConfig& c) -> auto& { return c.scenario.noise_std[0]; }));
    e.push_back(num<double>("noise_mem", "mem noise std",
                            [](RunConfig& c) -> auto& { return c.scenario.noise_std[1]; }));
    e.push_back(num<double>("noise_disk_io", "disk_io noise std",
                            [](RunConfig& c) -> auto& { return c.scenario.noise_std[2]; }));
    e.push_back(num<double>("noise_net", "net noise std",
                            [](RunConfig& c) -> auto& { return c.scenario.noise_std[3]; }));
    e.push_back(num<double>("ramp_cpu", "precursor cpu ramp height",
                            [](RunConfig& c) -> auto& { return c.scenario.ramp_cpu; }));
    e.push_back(num<double>("ramp_mem", "precursor mem ramp height",
                            [](RunConfig& c) -> auto& { return c.scenario.ramp_mem; }));
    e.push_back(num<double>("disk_oscillation", "precursor disk_io swing",
                            [](RunConfig& c) -> auto& { return c.scenario.disk_oscillation; }));
    // windowing
    e.push_back(num<std::size_t>("window_len", "time steps per window",
                                 [](RunConfig& c) -> auto& { return c.pipeline.window_len; }));
    e.push_back(num<std::size_t>("stride", "steps between window starts",
                                 [](RunConfig& c) -> auto& { return c.pipeline.stride; }));
    e.push_back(num<std::int64_t>("horizon", "look-ahead for positive labels, seconds",
                                  [](RunConfig& c) -> auto& { return c.pipeline.horizon; }));
    e.push_back(num<double>("train_ratio", "train share per node",
                            [](RunConfig& c) -> auto& { return c.pipeline.ratios.train; }));
    e.push_back(num<double>("val_ratio", "validation share per node",
                            [](RunConfig& c) -> auto& { return c.pipeline.ratios.val; }));
    e.push_back(num<double>("test_ratio", "test share per node",
                            [](RunConfig& c) -> auto& { return c.pipeline.ratios.test; }));
    // training
    e.push_back(num<std::size_t>("epochs", "training epochs",
                                 [](RunConfig& c) -> auto& { return c.train.epochs; }));
    e.push_back(num<std::size_t>("batch_size", "mini-batch size",
                                 [](RunConfig& c) -> auto& { return c.train.batch_size; }));
    e.push_back(num<double>("learning_rate", "optimizer step size",
                            [](RunConfig& c) -> auto& { return c.train.learning_rate; }));
    e.push_back(num<double>("beta1", "Adam first-moment decay",
                            [](RunConfig& c) -> auto& { return c.train.beta1; }));
    e.push_back(num<double>("beta2", "Adam second-moment decay",
                            [](RunConfig& c) -> auto& { return c.train.beta2; }));
    e.push_back(num<double>("adam_eps", "Adam denominator epsilon",
                            [](RunConfig& c) -> auto& { return c.train.adam_eps; }));
    e.push_back({{"optimizer", "adam|sgd"},
                 [](RunConfig& c, std::string_view k, std::string_view v) {
                   if (v == "adam") {
                     c.train.optimizer = OptimizerKind::kAdam;
                   } else if (v == "sgd") {
                     c.train.optimizer = OptimizerKind::kSgd;
                   } else {
                     throw ConfigError("config key '" + std::string(k) + "': expected adam|sgd");
                   }
                 }});
    e.push_back({{"pooling", "attention|mean"},
                 [](RunConfig& c, std::string_view, std::string_view v) {
                   c.train.pooling = parse_pooling(v);
                 }});
    e.push_back(num<std::size_t>("hidden_dim", "GRU hidden width",
                                 [](RunConfig& c) -> auto& { return c.train.hidden_dim; }));
    e.push_back(num<std::size_t>("head_hidden", "feedforward hidden width",
                                 [](RunConfig& c) -> auto& { return c.train.head_hidden; }));
    e.push_back({{"class_weights", "auto, or explicit 'w_pos,w_neg'"},
                 [](RunConfig& c, std::string_view k, std::string_view v) {
                   if (v == "auto") {
                     c.train.class_weights.reset();
                     return;
                   }
                   const auto comma = v.find(',');
                   if (comma == std::string_view::npos) {
                     throw ConfigError("config key '" + std::string(k) +
                                       "': expected auto or w_pos,w_neg");
                   }
                   c.train.class_weights = ClassWeights{parse_number<double>(k, v.substr(0, comma)),
                                                        parse_number<double>(k, v.substr(comma + 1))};
                 }});
    e.push_back(num<double>("threshold", "decision threshold on the fault probability",
                            [](RunConfig& c) -> auto& { return c.threshold; }));
    return e;
  }();
  return entries;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

const std::vector<RunConfig::KeyInfo>& RunConfig::keys() {
  static const std::vector<KeyInfo> infos = [] {
    std::vector<KeyInfo> out;
    for (const auto& e : registry()) out.push_back(e.info);
    return out;
  }();
  return infos;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  for (const auto& e : registry()) {
    if (e.info.name == key) {
      e.set(*this, key, trim(value));
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    try {
      set(trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void RunConfig::validate() const {
  pipeline.validate();
  train_config().validate();
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold must lie in [0,1]");
}

ScenarioConfig RunConfig::scenario_config() const {
  ScenarioConfig s = scenario;
  s.seed = seed;
  s.step = pipeline.step;
  s.window_len = pipeline.window_len;
  s.stride = pipeline.stride;
  s.horizon = pipeline.horizon;
  return s;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t = train;
  t.seed = seed;
  return t;
}

std::string RunConfig::out_path(std::string_view file) const {
  return (std::filesystem::path(out) / std::string(file)).string();
}

}  // namespace faultpred
