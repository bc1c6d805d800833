#include "faultpred/model_io.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "binary_io.hpp"
#include "faultpred/errors.hpp"

namespace faultpred {

namespace binio {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error while reading '" + path + "'");
  return std::move(ss).str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error while writing '" + path + "'");
}

}  // namespace binio

namespace {
constexpr std::string_view kMagic{"FPMODEL\0", 8};
}

std::string encode_model(const SavedModel& model) {
  const auto& p = model.params;
  p.check_shapes(p.dims);
  binio::Writer w;
  w.raw(kMagic);
  w.u32(kModelFormatVersion);
  w.u8(static_cast<std::uint8_t>(model.pooling));
  w.u64(p.dims.input_dim);
  w.u64(p.dims.hidden_dim);
  w.u64(p.dims.window_len);
  w.u64(p.dims.head_hidden);
  w.u32(static_cast<std::uint32_t>(model.norm.mean.size()));
  w.f64s(model.norm.mean);
  w.f64s(model.norm.stddev);
  const auto tensors = p.tensors();
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    w.str(t.name);
    w.u64(t.rows);
    w.u64(t.cols);
    w.f64s(t.values);
  }
  w.seal();
  return w.bytes();
}

SavedModel decode_model(std::string_view bytes) {
  binio::Reader r(bytes, "model file");
  if (r.raw(kMagic.size()) != kMagic) r.fail("bad magic, not a model file");
  const auto version = r.u32();
  if (version != kModelFormatVersion) {
    throw VersionError("model file: format version " + std::to_string(version) +
                       " is not supported (expected " + std::to_string(kModelFormatVersion) + ")");
  }
  SavedModel m;
  const auto pooling = r.u8();
  if (pooling > 1) r.fail("unknown pooling code " + std::to_string(pooling));
  m.pooling = static_cast<Pooling>(pooling);
  ModelDims dims;
  dims.input_dim = r.u64();
  dims.hidden_dim = r.u64();
  dims.window_len = r.u64();
  dims.head_hidden = r.u64();
  constexpr std::uint64_t kMaxDim = 1u << 16;
  if (dims.input_dim == 0 || dims.hidden_dim == 0 || dims.window_len == 0 ||
      dims.head_hidden == 0 || dims.input_dim > kMaxDim || dims.hidden_dim > kMaxDim ||
      dims.window_len > kMaxDim || dims.head_hidden > kMaxDim) {
    r.fail("implausible model dimensions");
  }
  const auto features = r.u32();
  if (features > kMaxDim) r.fail("implausible feature count");
  m.norm.mean.resize(features);
  m.norm.stddev.resize(features);
  r.f64s(m.norm.mean);
  r.f64s(m.norm.stddev);

  m.params.dims = dims;
  static_cast<ParamTensors&>(m.params) = ParamTensors::zeros(dims);
  auto tensors = m.params.tensors();
  if (r.u32() != tensors.size()) r.fail("unexpected tensor count");
  for (auto& t : tensors) {
    const auto name = r.str();
    if (name != t.name) r.fail("expected tensor '" + std::string(t.name) + "', found '" + name + "'");
    const auto rows = r.u64(), cols = r.u64();
    if (rows != t.rows || cols != t.cols) {
      r.fail("tensor '" + name + "' stored as " + std::to_string(rows) + "x" +
             std::to_string(cols) + " but header dims imply " + std::to_string(t.rows) + "x" +
             std::to_string(t.cols));
    }
    r.f64s(t.values);
  }
  r.verify_seal();
  return m;
}

void save_model(const SavedModel& model, const std::string& path) {
  binio::write_file(path, encode_model(model));
}

SavedModel load_model(const std::string& path, const std::optional<ModelDims>& expected) {
  SavedModel m;
  try {
    m = decode_model(binio::read_file(path));
  } catch (const FormatError& e) {
    if (dynamic_cast<const VersionError*>(&e) != nullptr) throw VersionError(path + ": " + e.what());
    throw FormatError(path + ": " + e.what());
  }
  if (expected && !(*expected == m.params.dims)) {
    const auto& d = m.params.dims;
    throw ShapeError(path + ": model dims (D=" + std::to_string(d.input_dim) +
                     ", H=" + std::to_string(d.hidden_dim) + ", T=" + std::to_string(d.window_len) +
                     ", head=" + std::to_string(d.head_hidden) + ") do not match expected (D=" +
                     std::to_string(expected->input_dim) + ", H=" +
                     std::to_string(expected->hidden_dim) + ", T=" +
                     std::to_string(expected->window_len) + ", head=" +
                     std::to_string(expected->head_hidden) + ")");
  }
  return m;
}

}  // namespace faultpred
