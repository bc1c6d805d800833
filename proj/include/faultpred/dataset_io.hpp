#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "faultpred/datapipe.hpp"

namespace faultpred {

inline constexpr std::uint32_t kDatasetFormatVersion = 1;

/// Windowed dataset container, little-endian:
///
///   "FPDATA\0\0"   8-byte magic
///   u32 format_version
///   u64 window_len, u64 stride, i64 horizon, i64 step
///   u32 F; f64[F] mean; f64[F] stddev
///   u64 window_count
///   per window: u32 len + node_id, i64 start_time, i64 end_time,
///               u8 label, u8 split, f64[window_len * F] normalized values
///   u64 FNV-1a digest of all preceding bytes
std::string encode_dataset(const WindowedDataset& ds);
WindowedDataset decode_dataset(std::string_view bytes);

void save_dataset(const WindowedDataset& ds, const std::string& path);
WindowedDataset load_dataset(const std::string& path);

/// Raw single-window CSV for scoring: header `cpu,mem,disk_io,net`, one row
/// per time step, oldest first, every field present.
Matrix parse_window_csv(std::istream& in);

/// Normalization statistics as CSV: `feature,mean,std`.
void write_norm_stats_csv(const NormStats& stats, std::ostream& out);

}  // namespace faultpred
