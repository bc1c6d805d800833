#include "faultpred/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

#include "binary_io.hpp"
#include "faultpred/errors.hpp"

namespace faultpred {

namespace {
constexpr std::string_view kMagic{"FPDATA\0\0", 8};
}

std::string encode_dataset(const WindowedDataset& ds) {
  const std::size_t F = ds.norm.mean.size();
  binio::Writer w;
  w.raw(kMagic);
  w.u32(kDatasetFormatVersion);
  w.u64(ds.window_len);
  w.u64(ds.stride);
  w.i64(ds.horizon);
  w.i64(ds.step);
  w.u32(static_cast<std::uint32_t>(F));
  w.f64s(ds.norm.mean);
  w.f64s(ds.norm.stddev);
  w.u64(ds.windows.size());
  for (const auto& win : ds.windows) {
    if (win.values.rows() != ds.window_len || win.values.cols() != F) {
      throw ShapeError("encode_dataset: window for node '" + win.node_id + "' has shape " +
                       std::to_string(win.values.rows()) + "x" + std::to_string(win.values.cols()));
    }
    w.str(win.node_id);
    w.i64(win.start_time);
    w.i64(win.end_time);
    w.u8(static_cast<std::uint8_t>(win.label));
    w.u8(static_cast<std::uint8_t>(win.split));
    w.f64s(win.values.span());
  }
  w.seal();
  return w.bytes();
}

WindowedDataset decode_dataset(std::string_view bytes) {
  binio::Reader r(bytes, "dataset file");
  if (r.raw(kMagic.size()) != kMagic) r.fail("bad magic, not a dataset file");
  const auto version = r.u32();
  if (version != kDatasetFormatVersion) {
    throw VersionError("dataset file: format version " + std::to_string(version) +
                       " is not supported (expected " + std::to_string(kDatasetFormatVersion) +
                       ")");
  }
  WindowedDataset ds;
  ds.window_len = r.u64();
  ds.stride = r.u64();
  ds.horizon = r.i64();
  ds.step = r.i64();
  const auto F = r.u32();
  if (ds.window_len == 0 || ds.window_len > (1u << 16) || F == 0 || F > 1024) {
    r.fail("implausible window shape");
  }
  ds.norm.mean.resize(F);
  ds.norm.stddev.resize(F);
  r.f64s(ds.norm.mean);
  r.f64s(ds.norm.stddev);
  const auto n = r.u64();
  const std::size_t per_window = ds.window_len * F * 8 + 22;
  if (n > r.remaining() / per_window) r.fail("window count exceeds file size");
  ds.windows.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Window win;
    win.node_id = r.str();
    win.start_time = r.i64();
    win.end_time = r.i64();
    win.label = r.u8();
    const auto split = r.u8();
    if (win.label > 1) r.fail("label out of range");
    if (split > 3) r.fail("split tag out of range");
    win.split = static_cast<Split>(split);
    win.values = Matrix(ds.window_len, F);
    r.f64s(win.values.span());
    ds.windows.push_back(std::move(win));
  }
  r.verify_seal();
  return ds;
}

void save_dataset(const WindowedDataset& ds, const std::string& path) {
  binio::write_file(path, encode_dataset(ds));
}

WindowedDataset load_dataset(const std::string& path) {
  try {
    return decode_dataset(binio::read_file(path));
  } catch (const VersionError& e) {
    throw VersionError(path + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

Matrix parse_window_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("window csv: empty input");
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
  std::string header;
  for (auto name : kFeatureNames) header += (header.empty() ? "" : ",") + std::string(name);
  if (line != header) {
    throw FormatError("window csv: expected header '" + header + "', got '" + line + "'");
  }
  std::vector<double> values;
  std::size_t rows = 0, line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    std::size_t fields = 0, pos = 0;
    for (;;) {
      const auto comma = line.find(',', pos);
      const auto field = std::string_view(line).substr(
          pos, comma == std::string::npos ? std::string::npos : comma - pos);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() ||
          !std::isfinite(v)) {
        throw FormatError("window csv line " + std::to_string(line_no) + ": bad value '" +
                          std::string(field) + "'");
      }
      values.push_back(v);
      ++fields;
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (fields != kFeatureCount) {
      throw FormatError("window csv line " + std::to_string(line_no) + ": expected " +
                        std::to_string(kFeatureCount) + " fields, got " + std::to_string(fields));
    }
    ++rows;
  }
  if (rows == 0) throw FormatError("window csv: no data rows");
  return Matrix(rows, kFeatureCount, std::move(values));
}

void write_norm_stats_csv(const NormStats& stats, std::ostream& out) {
  out << "feature,mean,std\n";
  char buf[64];
  for (std::size_t f = 0; f < stats.mean.size(); ++f) {
    out << (f < kFeatureCount ? kFeatureNames[f] : std::to_string(f).c_str());
    auto res = std::to_chars(buf, buf + sizeof buf, stats.mean[f]);
    out << ',' << std::string_view(buf, res.ptr - buf);
    res = std::to_chars(buf, buf + sizeof buf, stats.stddev[f]);
    out << ',' << std::string_view(buf, res.ptr - buf) << '\n';
  }
}

}  // namespace faultpred
