#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "faultpred/numerics.hpp"

namespace faultpred {

/// Metric columns of the telemetry CSV, in file order.
inline constexpr std::array<const char*, 4> kFeatureNames = {"cpu", "mem", "disk_io", "net"};
inline constexpr std::size_t kFeatureCount = kFeatureNames.size();
inline constexpr std::int64_t kDefaultStepSeconds = 300;

struct TelemetryRecord {
  std::int64_t timestamp = 0;  // epoch seconds
  std::string node_id;
  std::array<std::optional<double>, kFeatureCount> values;
};

struct FaultEvent {
  std::string node_id;
  std::int64_t fault_time = 0;
  friend bool operator==(const FaultEvent&, const FaultEvent&) = default;
};

/// A rejected CSV row. Line numbers are 1-based and count the header.
struct RowError {
  std::size_t line = 0;
  std::string message;
};

template <typename T>
struct ParseResult {
  std::vector<T> rows;
  std::vector<RowError> errors;
};

/// Reads `timestamp,node_id,cpu,mem,disk_io,net`. An empty metric field is
/// a missing value. Bad rows land in errors; a bad header throws FormatError.
ParseResult<TelemetryRecord> parse_telemetry(std::istream& in);
/// Reads `node_id,fault_time`.
ParseResult<FaultEvent> parse_fault_events(std::istream& in);

/// One node's metrics on a regular time grid.
struct TelemetrySeries {
  std::string node_id;
  std::int64_t grid_start = 0;
  std::int64_t step = kDefaultStepSeconds;
  Matrix values;                     // N x D
  std::vector<std::uint8_t> missing;  // N*D, row-major, 1 = missing
  bool normalized = false;

  std::size_t length() const noexcept { return values.rows(); }
  std::int64_t time_at(std::size_t row) const noexcept {
    return grid_start + static_cast<std::int64_t>(row) * step;
  }
  bool is_missing(std::size_t row, std::size_t col) const noexcept {
    return missing[row * values.cols() + col] != 0;
  }
  std::size_t missing_count() const noexcept;
};

/// Snaps each record to the nearest multiple of step (ties round up),
/// averages duplicates per feature and marks empty grid points missing.
/// All records must belong to one node.
TelemetrySeries align_to_grid(std::span<const TelemetryRecord> records,
                              std::int64_t step = kDefaultStepSeconds);

/// Linear interpolation across interior gaps, nearest observed value at the
/// edges. Throws DataError when a feature has no observation at all.
TelemetrySeries interpolate_missing(const TelemetrySeries& series);

/// Per-feature z-score statistics (population standard deviation).
struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;
  friend bool operator==(const NormStats&, const NormStats&) = default;
};

/// Statistics over all rows with timestamp <= train_end[node]. Nodes absent
/// from train_end contribute nothing. Throws DataError for a constant feature
/// or when no rows qualify.
NormStats fit_norm_stats(std::span<const TelemetrySeries> series,
                         const std::map<std::string, std::int64_t>& train_end);

/// x' = (x - mean) / std. Throws ContractError if the series is already
/// normalized, ShapeError on a feature-count mismatch.
TelemetrySeries apply_norm(const TelemetrySeries& series, const NormStats& stats);
/// Same transform on a bare T x D window.
Matrix apply_norm(const Matrix& window, const NormStats& stats);

enum class Split : std::uint8_t { kTrain = 0, kVal = 1, kTest = 2, kNone = 3 };
const char* to_string(Split s) noexcept;
/// Throws ConfigError for anything other than train|val|test.
Split parse_split(const std::string& text);

struct Window {
  Matrix values;  // T x D
  int label = 0;
  std::string node_id;
  std::int64_t start_time = 0;
  std::int64_t end_time = 0;  // timestamp of the last row
  Split split = Split::kNone;
};

/// Windows of `length` consecutive rows every `stride` rows. A window is
/// positive when a fault for its node lies in (end, end + horizon]; windows
/// whose own time span contains a fault are dropped.
std::vector<Window> make_windows(const TelemetrySeries& series, std::span<const FaultEvent> events,
                                 std::size_t length, std::size_t stride, std::int64_t horizon);

/// Number of windows make_windows would cut before dropping fault-containing ones.
std::size_t window_count(std::size_t rows, std::size_t length, std::size_t stride);

struct SplitRatios {
  double train = 0.7;
  double val = 0.15;
  double test = 0.15;
};

/// Tags windows per node in end-time order. Windows of a later split whose
/// span reaches back into an earlier split are purged so no window straddles
/// a boundary. Output is ordered by node id, then end time.
std::vector<Window> chrono_split(std::vector<Window> windows, const SplitRatios& ratios = {});

struct WindowedDataset {
  std::vector<Window> windows;
  NormStats norm;
  std::size_t window_len = 0;
  std::size_t stride = 0;
  std::int64_t horizon = 0;
  std::int64_t step = kDefaultStepSeconds;

  std::size_t feature_count() const noexcept { return norm.mean.size(); }
  std::vector<std::size_t> indices(Split s) const;
  std::size_t count(Split s) const;
  std::size_t positives(Split s) const;
};

struct PipelineConfig {
  std::size_t window_len = 48;
  std::size_t stride = 12;
  std::int64_t horizon = 3600;
  std::int64_t step = kDefaultStepSeconds;
  SplitRatios ratios;

  /// Throws ConfigError on nonsense values.
  void validate() const;
};

/// Summary of what the pipeline did, for logging.
struct PipelineReport {
  std::size_t nodes = 0;
  std::size_t records = 0;
  std::size_t filled_values = 0;
  std::size_t excluded_windows = 0;
  std::size_t unmatched_events = 0;
};

/// Full preprocessing: align, interpolate, window, split, normalize with
/// training-range statistics. Nodes are processed in lexicographic order.
WindowedDataset build_dataset(std::span<const TelemetryRecord> records,
                              std::span<const FaultEvent> events, const PipelineConfig& cfg,
                              PipelineReport* report = nullptr);

}  // namespace faultpred
