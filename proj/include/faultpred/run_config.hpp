#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "faultpred/datapipe.hpp"
#include "faultpred/synthgen.hpp"
#include "faultpred/training.hpp"

namespace faultpred {

/// Settings shared by all CLI subcommands.
///
/// Config files are plain text, one `key = value` per line; `#` starts a
/// comment and blank lines are ignored. Keys are the names listed by
/// RunConfig::keys(). Unknown keys and unparsable values are rejected.
struct RunConfig {
  ScenarioConfig scenario;
  PipelineConfig pipeline;
  TrainConfig train;
  double threshold = 0.5;
  std::uint64_t seed = 42;
  std::string out = ".";
  std::string telemetry;
  std::string events;
  std::string dataset;
  std::string model;
  std::string window;
  Split split = Split::kTest;

  struct KeyInfo {
    std::string_view name;
    std::string_view help;
  };
  static const std::vector<KeyInfo>& keys();

  /// Throws ConfigError naming the key.
  void set(std::string_view key, std::string_view value);
  /// Throws IoError / ConfigError with file:line context.
  void load_file(const std::string& path);
  void validate() const;

  /// Scenario with the shared seed, step and windowing applied.
  ScenarioConfig scenario_config() const;
  TrainConfig train_config() const;
  std::string out_path(std::string_view file) const;
};

}  // namespace faultpred
