#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "faultpred/datapipe.hpp"
#include "faultpred/model.hpp"

namespace faultpred {

/// Trained classifier plus what is needed to score raw telemetry with it.
struct SavedModel {
  ModelParams params;
  Pooling pooling = Pooling::kAttention;
  NormStats norm;
  friend bool operator==(const SavedModel&, const SavedModel&) = default;
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Model container, all integers and doubles little-endian:
///
///   "FPMODEL\0"                      8-byte magic
///   u32 format_version               kModelFormatVersion
///   u8  pooling                      0 attention, 1 mean
///   u64 input_dim, hidden_dim, window_len, head_hidden
///   u32 F; f64[F] mean; f64[F] stddev   normalization statistics
///   u32 tensor_count                 15
///   per tensor: u32 name_len, name bytes, u64 rows, u64 cols, f64[rows*cols]
///   u64 FNV-1a digest of all preceding bytes
///
/// Tensors are written in ParamTensors::tensors() order; values are raw
/// IEEE bits so a round trip is exact.
std::string encode_model(const SavedModel& model);
SavedModel decode_model(std::string_view bytes);

void save_model(const SavedModel& model, const std::string& path);
/// Throws IoError (unreadable), VersionError, FormatError (corruption) or,
/// when expected is given and differs from the stored dims, ShapeError.
SavedModel load_model(const std::string& path, const std::optional<ModelDims>& expected = {});

}  // namespace faultpred
