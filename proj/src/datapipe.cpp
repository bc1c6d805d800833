#include "faultpred/datapipe.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <istream>
#include <string_view>

#include "faultpred/errors.hpp"

namespace faultpred {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    const auto comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

bool parse_int(std::string_view s, std::int64_t& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_real(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

void expect_header(std::istream& in, const std::vector<std::string_view>& expected,
                   std::string_view what) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError(std::string(what) + ": empty input, no header");
  const auto fields = split_fields(trim(line));
  bool ok = fields.size() == expected.size();
  for (std::size_t i = 0; ok && i < fields.size(); ++i) ok = trim(fields[i]) == expected[i];
  if (!ok) {
    std::string want;
    for (auto e : expected) want += (want.empty() ? "" : ",") + std::string(e);
    throw FormatError(std::string(what) + ": expected header '" + want + "', got '" +
                      std::string(trim(line)) + "'");
  }
}

}  // namespace

ParseResult<TelemetryRecord> parse_telemetry(std::istream& in) {
  std::vector<std::string_view> header = {"timestamp", "node_id"};
  for (auto name : kFeatureNames) header.emplace_back(name);
  expect_header(in, header, "telemetry csv");

  ParseResult<TelemetryRecord> result;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    const auto fields = split_fields(text);
    if (fields.size() != header.size()) {
      result.errors.push_back({line_no, "expected " + std::to_string(header.size()) +
                                            " fields, got " + std::to_string(fields.size())});
      continue;
    }
    TelemetryRecord rec;
    if (!parse_int(trim(fields[0]), rec.timestamp) || rec.timestamp <= 0) {
      result.errors.push_back({line_no, "bad timestamp '" + std::string(fields[0]) + "'"});
      continue;
    }
    rec.node_id = std::string(trim(fields[1]));
    if (rec.node_id.empty()) {
      result.errors.push_back({line_no, "empty node_id"});
      continue;
    }
    bool ok = true;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      const auto field = trim(fields[2 + f]);
      if (field.empty()) continue;
      double v = 0.0;
      if (!parse_real(field, v)) {
        result.errors.push_back({line_no, std::string("bad ") + kFeatureNames[f] + " value '" +
                                              std::string(field) + "'"});
        ok = false;
        break;
      }
      rec.values[f] = v;
    }
    if (ok) result.rows.push_back(std::move(rec));
  }
  return result;
}

ParseResult<FaultEvent> parse_fault_events(std::istream& in) {
  expect_header(in, {"node_id", "fault_time"}, "fault events csv");
  ParseResult<FaultEvent> result;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    const auto fields = split_fields(text);
    if (fields.size() != 2) {
      result.errors.push_back({line_no, "expected 2 fields, got " + std::to_string(fields.size())});
      continue;
    }
    FaultEvent ev;
    ev.node_id = std::string(trim(fields[0]));
    if (ev.node_id.empty()) {
      result.errors.push_back({line_no, "empty node_id"});
      continue;
    }
    if (!parse_int(trim(fields[1]), ev.fault_time) || ev.fault_time <= 0) {
      result.errors.push_back({line_no, "bad fault_time '" + std::string(fields[1]) + "'"});
      continue;
    }
    result.rows.push_back(std::move(ev));
  }
  return result;
}

std::size_t TelemetrySeries::missing_count() const noexcept {
  return static_cast<std::size_t>(std::count(missing.begin(), missing.end(), std::uint8_t{1}));
}

namespace {

std::int64_t snap(std::int64_t ts, std::int64_t step) {
  // nearest multiple of step, halfway rounds up; floor division for negatives
  const std::int64_t shifted = ts + step / 2;
  std::int64_t q = shifted / step;
  if (shifted % step != 0 && shifted < 0) --q;
  return q * step;
}

}  // namespace

TelemetrySeries align_to_grid(std::span<const TelemetryRecord> records, std::int64_t step) {
  if (records.empty()) throw DataError("align_to_grid: no records");
  if (step <= 0) throw ConfigError("align_to_grid: step must be positive");
  const std::string& node = records.front().node_id;
  std::int64_t lo = snap(records.front().timestamp, step), hi = lo;
  for (const auto& r : records) {
    if (r.node_id != node) {
      throw DataError("align_to_grid: records mix nodes '" + node + "' and '" + r.node_id + "'");
    }
    const auto g = snap(r.timestamp, step);
    lo = std::min(lo, g);
    hi = std::max(hi, g);
  }
  const auto n = static_cast<std::size_t>((hi - lo) / step + 1);
  Matrix sums(n, kFeatureCount);
  std::vector<std::uint32_t> counts(n * kFeatureCount, 0);
  for (const auto& r : records) {
    const auto row = static_cast<std::size_t>((snap(r.timestamp, step) - lo) / step);
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      if (!r.values[f]) continue;
      sums(row, f) += *r.values[f];
      ++counts[row * kFeatureCount + f];
    }
  }
  TelemetrySeries s;
  s.node_id = node;
  s.grid_start = lo;
  s.step = step;
  s.values = Matrix(n, kFeatureCount);
  s.missing.assign(n * kFeatureCount, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      const auto c = counts[i * kFeatureCount + f];
      if (c == 0) {
        s.missing[i * kFeatureCount + f] = 1;
      } else {
        s.values(i, f) = sums(i, f) / double(c);
      }
    }
  }
  return s;
}

TelemetrySeries interpolate_missing(const TelemetrySeries& series) {
  TelemetrySeries out = series;
  const std::size_t n = series.length(), d = series.values.cols();
  for (std::size_t f = 0; f < d; ++f) {
    std::optional<std::size_t> prev;
    for (std::size_t i = 0; i < n; ++i) {
      if (series.is_missing(i, f)) continue;
      if (!prev) {
        for (std::size_t k = 0; k < i; ++k) out.values(k, f) = series.values(i, f);
      } else if (i > *prev + 1) {
        const double a = series.values(*prev, f), b = series.values(i, f);
        const double span = double(i - *prev);
        for (std::size_t k = *prev + 1; k < i; ++k) {
          out.values(k, f) = a + (b - a) * (double(k - *prev) / span);
        }
      }
      prev = i;
    }
    if (!prev) {
      throw DataError("node '" + series.node_id + "': feature '" +
                      (f < kFeatureCount ? std::string(kFeatureNames[f]) : std::to_string(f)) +
                      "' has no observed values");
    }
    for (std::size_t k = *prev + 1; k < n; ++k) out.values(k, f) = series.values(*prev, f);
  }
  std::fill(out.missing.begin(), out.missing.end(), std::uint8_t{0});
  return out;
}

NormStats fit_norm_stats(std::span<const TelemetrySeries> series,
                         const std::map<std::string, std::int64_t>& train_end) {
  std::size_t d = 0;
  for (const auto& s : series) d = std::max(d, s.values.cols());
  std::vector<double> sum(d, 0.0);
  std::size_t count = 0;
  auto for_each_row = [&](auto&& fn) {
    for (const auto& s : series) {
      const auto it = train_end.find(s.node_id);
      if (it == train_end.end()) continue;
      for (std::size_t i = 0; i < s.length() && s.time_at(i) <= it->second; ++i) fn(s, i);
    }
  };
  for_each_row([&](const TelemetrySeries& s, std::size_t i) {
    for (std::size_t f = 0; f < d; ++f) sum[f] += s.values(i, f);
    ++count;
  });
  if (count == 0) throw DataError("fit_norm_stats: no rows fall inside the training range");
  NormStats stats{std::vector<double>(d), std::vector<double>(d, 0.0)};
  for (std::size_t f = 0; f < d; ++f) stats.mean[f] = sum[f] / double(count);
  for_each_row([&](const TelemetrySeries& s, std::size_t i) {
    for (std::size_t f = 0; f < d; ++f) {
      const double dev = s.values(i, f) - stats.mean[f];
      stats.stddev[f] += dev * dev;
    }
  });
  for (std::size_t f = 0; f < d; ++f) {
    stats.stddev[f] = std::sqrt(stats.stddev[f] / double(count));
    if (!(stats.stddev[f] > 0.0)) {
      throw DataError("fit_norm_stats: feature '" +
                      (f < kFeatureCount ? std::string(kFeatureNames[f]) : std::to_string(f)) +
                      "' is constant over the training range");
    }
  }
  return stats;
}

Matrix apply_norm(const Matrix& window, const NormStats& stats) {
  if (window.cols() != stats.mean.size() || stats.stddev.size() != stats.mean.size()) {
    throw ShapeError("apply_norm: data has " + std::to_string(window.cols()) +
                     " features, statistics have " + std::to_string(stats.mean.size()));
  }
  Matrix out = window;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    for (std::size_t f = 0; f < row.size(); ++f) {
      row[f] = (row[f] - stats.mean[f]) / stats.stddev[f];
    }
  }
  return out;
}

TelemetrySeries apply_norm(const TelemetrySeries& series, const NormStats& stats) {
  if (series.normalized) {
    throw ContractError("apply_norm: series for node '" + series.node_id +
                        "' is already normalized");
  }
  TelemetrySeries out = series;
  out.values = apply_norm(series.values, stats);
  out.normalized = true;
  return out;
}

const char* to_string(Split s) noexcept {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
    case Split::kNone: break;
  }
  return "none";
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::kTrain;
  if (text == "val") return Split::kVal;
  if (text == "test") return Split::kTest;
  throw ConfigError("unknown split '" + text + "' (expected train|val|test)");
}

std::size_t window_count(std::size_t rows, std::size_t length, std::size_t stride) {
  if (length == 0 || stride == 0 || length > rows) return 0;
  return (rows - length) / stride + 1;
}

std::vector<Window> make_windows(const TelemetrySeries& series, std::span<const FaultEvent> events,
                                 std::size_t length, std::size_t stride, std::int64_t horizon) {
  if (length == 0 || stride == 0) throw ConfigError("make_windows: length and stride must be >= 1");
  if (horizon <= 0) throw ConfigError("make_windows: horizon must be positive");
  if (length > series.length()) {
    throw DataError("node '" + series.node_id + "': window length " + std::to_string(length) +
                    " exceeds series length " + std::to_string(series.length()));
  }
  std::vector<std::int64_t> faults;
  for (const auto& e : events) {
    if (e.node_id == series.node_id) faults.push_back(e.fault_time);
  }
  std::sort(faults.begin(), faults.end());

  const std::size_t d = series.values.cols();
  const std::size_t n = window_count(series.length(), length, stride);
  std::vector<Window> out;
  out.reserve(n);
  for (std::size_t w = 0; w < n; ++w) {
    const std::size_t first = w * stride;
    const std::int64_t start = series.time_at(first);
    const std::int64_t end = series.time_at(first + length - 1);
    // first fault at or after the window start
    const auto it = std::lower_bound(faults.begin(), faults.end(), start);
    if (it != faults.end() && *it <= end) continue;
    const bool positive = it != faults.end() && *it > end && *it <= end + horizon;

    Window win;
    win.values = Matrix(length, d);
    std::copy_n(series.values.data() + first * d, length * d, win.values.data());
    win.label = positive ? 1 : 0;
    win.node_id = series.node_id;
    win.start_time = start;
    win.end_time = end;
    out.push_back(std::move(win));
  }
  return out;
}

std::vector<Window> chrono_split(std::vector<Window> windows, const SplitRatios& ratios) {
  const double total = ratios.train + ratios.val + ratios.test;
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 || std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("split ratios must be nonnegative and sum to 1");
  }
  std::sort(windows.begin(), windows.end(), [](const Window& a, const Window& b) {
    return a.node_id != b.node_id ? a.node_id < b.node_id : a.end_time < b.end_time;
  });

  std::vector<Window> out;
  out.reserve(windows.size());
  std::size_t begin = 0;
  while (begin < windows.size()) {
    std::size_t end = begin;
    while (end < windows.size() && windows[end].node_id == windows[begin].node_id) ++end;
    const std::size_t n = end - begin;
    const auto n_train = std::min<std::size_t>(n, std::llround(double(n) * ratios.train));
    const auto n_val = std::min<std::size_t>(n - n_train, std::llround(double(n) * ratios.val));

    std::optional<std::int64_t> boundary;  // last end time of the previous split
    Split current = Split::kTrain;
    for (std::size_t i = 0; i < n; ++i) {
      Window& w = windows[begin + i];
      const Split tag = i < n_train ? Split::kTrain
                        : i < n_train + n_val ? Split::kVal
                                              : Split::kTest;
      if (tag != current) {
        if (i > 0) boundary = windows[begin + i - 1].end_time;
        current = tag;
      }
      if (boundary && w.start_time <= *boundary) continue;
      w.split = tag;
      out.push_back(std::move(w));
    }
    begin = end;
  }
  return out;
}

std::vector<std::size_t> WindowedDataset::indices(Split s) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].split == s) idx.push_back(i);
  }
  return idx;
}

std::size_t WindowedDataset::count(Split s) const {
  return static_cast<std::size_t>(
      std::count_if(windows.begin(), windows.end(), [s](const Window& w) { return w.split == s; }));
}

std::size_t WindowedDataset::positives(Split s) const {
  return static_cast<std::size_t>(std::count_if(windows.begin(), windows.end(), [s](const Window& w) {
    return w.split == s && w.label == 1;
  }));
}

void PipelineConfig::validate() const {
  if (window_len == 0) throw ConfigError("window_len must be >= 1");
  if (stride == 0) throw ConfigError("stride must be >= 1");
  if (horizon <= 0) throw ConfigError("horizon must be positive");
  if (step <= 0) throw ConfigError("step must be positive");
  const double total = ratios.train + ratios.val + ratios.test;
  if (ratios.train <= 0 || ratios.val < 0 || ratios.test < 0 || std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("split ratios must be nonnegative, train > 0, and sum to 1");
  }
}

WindowedDataset build_dataset(std::span<const TelemetryRecord> records,
                              std::span<const FaultEvent> events, const PipelineConfig& cfg,
                              PipelineReport* report) {
  cfg.validate();
  if (records.empty()) throw DataError("no telemetry records");

  std::map<std::string, std::vector<TelemetryRecord>> by_node;
  for (const auto& r : records) by_node[r.node_id].push_back(r);
  std::vector<const std::vector<TelemetryRecord>*> groups;
  for (const auto& [node, recs] : by_node) groups.push_back(&recs);

  // per-node alignment and gap filling are independent
  const auto n_nodes = static_cast<std::ptrdiff_t>(groups.size());
  std::vector<TelemetrySeries> series(groups.size());
  std::vector<std::size_t> filled(groups.size(), 0);
  std::vector<std::exception_ptr> failures(groups.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n_nodes; ++i) {
    try {
      const auto aligned = align_to_grid(*groups[i], cfg.step);
      filled[i] = aligned.missing_count();
      series[i] = interpolate_missing(aligned);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  std::vector<Window> raw;
  std::size_t cut = 0;
  for (const auto& s : series) {
    auto w = make_windows(s, events, cfg.window_len, cfg.stride, cfg.horizon);
    cut += window_count(s.length(), cfg.window_len, cfg.stride);
    std::move(w.begin(), w.end(), std::back_inserter(raw));
  }
  const std::size_t kept = raw.size();
  auto tagged = chrono_split(std::move(raw), cfg.ratios);

  std::map<std::string, std::int64_t> train_end;
  for (const auto& w : tagged) {
    if (w.split != Split::kTrain) continue;
    auto [it, inserted] = train_end.emplace(w.node_id, w.end_time);
    if (!inserted) it->second = std::max(it->second, w.end_time);
  }
  WindowedDataset ds;
  ds.norm = fit_norm_stats(series, train_end);
  ds.window_len = cfg.window_len;
  ds.stride = cfg.stride;
  ds.horizon = cfg.horizon;
  ds.step = cfg.step;
  for (auto& w : tagged) w.values = apply_norm(w.values, ds.norm);
  ds.windows = std::move(tagged);

  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    if (ds.count(s) == 0) {
      throw DataError(std::string("the ") + to_string(s) +
                      " split is empty; use longer series or a smaller window/stride");
    }
  }

  if (report != nullptr) {
    report->nodes = series.size();
    report->records = records.size();
    report->filled_values = 0;
    for (auto f : filled) report->filled_values += f;
    report->excluded_windows = cut - kept;
    std::size_t unmatched = 0;
    for (const auto& e : events) {
      const auto it = std::find_if(series.begin(), series.end(),
                                   [&](const TelemetrySeries& s) { return s.node_id == e.node_id; });
      if (it == series.end() || e.fault_time < it->grid_start ||
          e.fault_time > it->time_at(it->length() - 1)) {
        ++unmatched;
      }
    }
    report->unmatched_events = unmatched;
  }
  return ds;
}

}  // namespace faultpred
