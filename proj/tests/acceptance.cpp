// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Pass criterion numbers as arguments to run a subset.

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "faultpred/datapipe.hpp"
#include "faultpred/evalharness.hpp"
#include "faultpred/model.hpp"
#include "faultpred/run_config.hpp"
#include "faultpred/synthgen.hpp"
#include "faultpred/training.hpp"

namespace fp = faultpred;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream o;
  o.precision(prec);
  o << v;
  return o.str();
}

fp::WindowedDataset synthetic_dataset(const fp::ScenarioConfig& sc) {
  const auto data = fp::generate(sc);
  std::istringstream tin(data.telemetry_csv), ein(data.events_csv);
  const auto recs = fp::parse_telemetry(tin);
  const auto evs = fp::parse_fault_events(ein);
  fp::PipelineConfig pc;
  pc.window_len = sc.window_len;
  pc.stride = sc.stride;
  pc.horizon = sc.horizon;
  pc.step = sc.step;
  return fp::build_dataset(recs.rows, evs.rows, pc);
}

// ---------------------------------------------------------------- 1
Outcome gradient_fidelity() {
  const auto t0 = Clock::now();
  const fp::ModelDims dims{4, 8, 6, 8};
  double worst = 0.0;
  std::string worst_name;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (const auto& t : fp::gradient_check(dims, seed).tensors) {
      if (t.relative_error > worst) {
        worst = t.relative_error;
        worst_name = t.name;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-4 && secs < 60.0,
          "max rel err " + fmt(worst, 3) + " (" + worst_name + ") <= 1e-4 over 20 seeds, " +
              fmt(secs, 3) + " s < 60 s"};
}

// ---------------------------------------------------------------- 2
Outcome metric_oracles() {
  fp::SeededRng rng(20240601);
  double worst_auc = 0.0;
  bool confusion_ok = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(199);
    std::vector<double> s(n);
    std::vector<int> y(n);
    const bool coarse = rng.bernoulli(0.5);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = coarse ? double(rng.below(8)) / 7.0 : rng.uniform();
      y[i] = rng.bernoulli(0.35);
    }
    y[0] = 1;
    y[1] = 0;
    double wins = 0, pairs = 0;
    fp::Confusion c;
    const double thr = rng.uniform();
    for (std::size_t i = 0; i < n; ++i) {
      const bool pred = s[i] >= thr;
      if (y[i]) {
        pred ? ++c.tp : ++c.fn;
      } else {
        pred ? ++c.fp : ++c.tn;
      }
      if (y[i] != 1) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (y[j] != 0) continue;
        pairs += 1;
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
    }
    worst_auc = std::max(worst_auc, std::abs(fp::auc(s, y) - wins / pairs));
    const auto m = fp::accuracy_f1(s, y, thr);
    const double p = c.tp + c.fp ? double(c.tp) / double(c.tp + c.fp) : 0.0;
    const double r = double(c.tp) / double(c.tp + c.fn);
    const double f1 = c.tp == 0 ? 0.0 : 2 * p * r / (p + r);
    confusion_ok = confusion_ok && m.confusion == c &&
                   m.accuracy == double(c.tp + c.tn) / double(n) && m.f1 == f1;
  }
  const double auc_case =
      fp::auc(std::vector<double>{0.8, 0.4, 0.6, 0.2}, std::vector<int>{1, 1, 0, 0});
  const auto f1_case =
      fp::accuracy_f1(std::vector<double>{0.9, 0.8, 0.7, 0.6, 0.4, 0.3, 0.2, 0.1, 0.05, 0.0},
                      std::vector<int>{1, 1, 1, 0, 1, 0, 0, 0, 0, 0});
  const bool examples = auc_case == 0.75 && f1_case.f1 == 0.75 && f1_case.accuracy == 0.8;
  return {worst_auc <= 1e-12 && confusion_ok && examples,
          "auc vs all-pairs max diff " + fmt(worst_auc, 3) + " <= 1e-12 (1000 instances), " +
              "confusion/acc/f1 oracle " + (confusion_ok ? "exact" : "MISMATCH") +
              ", examples auc=" + fmt(auc_case) + " f1=" + fmt(f1_case.f1)};
}

// ---------------------------------------------------------------- 3 and 5
struct BenchmarkRun {
  fp::TrainResult result;
  fp::Evaluation test;
  double initial_train_loss = 0.0;
  double seconds = 0.0;
};

const BenchmarkRun& default_benchmark() {
  static const BenchmarkRun run = [] {
    BenchmarkRun r;
    const auto t0 = Clock::now();
    const fp::RunConfig defaults;
    const auto ds = synthetic_dataset(defaults.scenario_config());
    const auto tc = defaults.train_config();
    r.result = fp::train(ds, tc, [](const fp::EpochLoss& e) {
      std::cerr << "  epoch " << e.epoch << " train " << e.train_loss << " val " << e.val_loss
                << '\n';
    });
    r.test = fp::evaluate(r.result.params, tc.pooling, ds, fp::Split::kTest);
    r.seconds = seconds_since(t0);
    fp::ModelDims dims{ds.feature_count(), tc.hidden_dim, ds.window_len, tc.head_hidden};
    r.initial_train_loss = fp::mean_loss(fp::init_params(dims, tc.seed), tc.pooling, ds.windows,
                                         ds.indices(fp::Split::kTrain), r.result.weights);
    return r;
  }();
  return run;
}

Outcome synthetic_benchmark() {
  const auto& r = default_benchmark();
  const auto& m = r.test.report;
  return {m.auc >= 0.90 && m.f1 >= 0.80 && r.seconds < 600.0,
          "test auc " + fmt(m.auc) + " >= 0.90, f1 " + fmt(m.f1) + " >= 0.80 (n=" +
              std::to_string(m.n) + ", tp " + std::to_string(m.confusion.tp) + " fp " +
              std::to_string(m.confusion.fp) + " fn " + std::to_string(m.confusion.fn) + "), " +
              fmt(r.seconds, 3) + " s < 600 s"};
}

Outcome convergence_shape() {
  const auto& r = default_benchmark();
  const auto& h = r.result.history;
  bool descending = h.size() >= 5;
  double prev = r.initial_train_loss;
  for (std::size_t i = 0; i < 5 && i < h.size(); ++i) {
    descending = descending && h[i].train_loss < prev;
    prev = h[i].train_loss;
  }
  // plateau: three consecutive epoch-over-epoch relative changes below 1%
  std::size_t plateau = 0, run = 0;
  double smallest = INFINITY;
  for (std::size_t i = 1; i < h.size(); ++i) {
    const double rel = std::abs(h[i].val_loss - h[i - 1].val_loss) / h[i - 1].val_loss;
    smallest = std::min(smallest, rel);
    run = rel < 0.01 ? run + 1 : 0;
    if (run >= 3 && plateau == 0) plateau = h[i].epoch;
  }
  double vmin = INFINITY;
  for (const auto& e : h) vmin = std::min(vmin, e.val_loss);
  bool bounded = plateau != 0;
  for (const auto& e : h) {
    if (plateau != 0 && e.epoch > plateau && e.val_loss > 2.0 * vmin) bounded = false;
  }
  std::string val;
  for (const auto& e : h) val += (val.empty() ? "" : " ") + fmt(e.val_loss, 3);
  return {descending && plateau != 0 && plateau <= 30 && bounded,
          std::string("train loss falls each of first 5 epochs: ") + (descending ? "yes" : "no") +
              "; val plateau epoch: " + (plateau ? std::to_string(plateau) : "none") +
              " (smallest rel change " + fmt(smallest, 3) + "); post-plateau <= 2x min: " +
              (plateau ? (bounded ? "yes" : "no") : "n/a") + "; val loss [" + val + "]"};
}

// ---------------------------------------------------------------- 4
Outcome ablation_direction() {
  const auto t0 = Clock::now();
  // the precursor may sit anywhere inside a positive window
  const fp::RunConfig defaults;
  auto sc = defaults.scenario_config();
  sc.precursor_offset_min = 12;
  sc.precursor_offset_max = 59;
  const auto ds = synthetic_dataset(sc);
  const auto rep = fp::ablation_run(ds, defaults.train_config());
  const auto& a = rep.attention.evaluation;
  const auto& m = rep.mean.evaluation;
  const bool same_split = a.labels == m.labels && a.report.n == m.report.n;
  return {same_split && rep.delta_auc >= 0.01,
          "attention auc " + fmt(a.report.auc) + " - mean auc " + fmt(m.report.auc) + " = " +
              fmt(rep.delta_auc, 3) + " >= 0.01 (offsets 12..59 steps, shared test split n=" +
              std::to_string(a.report.n) + "), " + fmt(seconds_since(t0), 3) + " s"};
}

// ---------------------------------------------------------------- 6
Outcome pipeline_invariants() {
  fp::SeededRng rng(6);
  bool interp = true, count_law = true, labels = true, leakage = true, chrono = true;

  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng.below(100);
    fp::TelemetrySeries s;
    s.node_id = "n";
    s.values = fp::Matrix(n, fp::kFeatureCount);
    s.missing.assign(n * fp::kFeatureCount, 0);
    const double a = rng.uniform(-10, 10), b = rng.uniform(-1, 1);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t f = 0; f < fp::kFeatureCount; ++f) s.values(i, f) = a + b * double(i + f);
    const auto clean = s.values;
    for (std::size_t i = 1; i + 1 < n; ++i)
      for (std::size_t f = 0; f < fp::kFeatureCount; ++f)
        if (rng.bernoulli(0.3)) s.missing[i * fp::kFeatureCount + f] = 1;
    const auto filled = fp::interpolate_missing(s);
    for (std::size_t i = 0; i < clean.size(); ++i)
      interp = interp && std::abs(filled.values.data()[i] - clean.data()[i]) <= 1e-9;
  }

  for (std::size_t N = 1; N <= 120; ++N)
    for (std::size_t T = 1; T <= std::min<std::size_t>(N, 60); ++T)
      for (std::size_t stride = 1; stride <= 16; ++stride)
        count_law = count_law && fp::window_count(N, T, stride) == (N - T) / stride + 1;

  std::size_t checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t N = 100 + rng.below(400), T = 1 + rng.below(48), stride = 1 + rng.below(12);
    const std::int64_t horizon = 300 * std::int64_t(1 + rng.below(24));
    fp::TelemetrySeries s;
    s.node_id = "n";
    s.grid_start = 600;
    s.values = fp::Matrix(N, fp::kFeatureCount);
    s.missing.assign(N * fp::kFeatureCount, 0);
    std::vector<fp::FaultEvent> ev;
    for (std::size_t k = rng.below(15); k > 0; --k)
      ev.push_back({"n", 600 + std::int64_t(rng.below(300 * (N + 20)))});
    const auto ws = fp::make_windows(s, ev, T, stride, horizon);
    std::size_t next = 0;
    for (std::size_t w = 0; w < fp::window_count(N, T, stride); ++w) {
      const auto start = s.time_at(w * stride), end = s.time_at(w * stride + T - 1);
      int expect = 0;
      for (const auto& e : ev) {
        if (e.fault_time >= start && e.fault_time <= end) expect = -1;
        if (expect >= 0 && e.fault_time > end && e.fault_time <= end + horizon) expect = 1;
      }
      if (expect < 0) continue;
      labels = labels && next < ws.size() && ws[next].start_time == start && ws[next].label == expect;
      ++next;
      ++checked;
    }
    labels = labels && next == ws.size();
  }

  {
    std::vector<fp::TelemetrySeries> ss;
    std::map<std::string, std::int64_t> train_end;
    for (int k = 0; k < 3; ++k) {
      fp::TelemetrySeries s;
      s.node_id = "n" + std::to_string(k);
      s.grid_start = 300;
      s.values = fp::Matrix(100, fp::kFeatureCount);
      s.missing.assign(100 * fp::kFeatureCount, 0);
      for (auto& v : s.values.span()) v = rng.normal();
      train_end[s.node_id] = s.time_at(69);
      ss.push_back(s);
    }
    const auto before = fp::fit_norm_stats(ss, train_end);
    for (auto& s : ss) s.values(70 + rng.below(30), rng.below(4)) += 1e3;
    leakage = fp::fit_norm_stats(ss, train_end) == before;
  }

  {
    fp::ScenarioConfig sc;
    sc.node_count = 8;
    const auto ds = synthetic_dataset(sc);
    std::map<std::string, std::array<std::int64_t, 6>> span;  // max end, min start per split
    for (const auto& w : ds.windows) {
      auto [it, fresh] = span.try_emplace(w.node_id);
      if (fresh) it->second = {INT64_MIN, INT64_MIN, INT64_MIN, INT64_MAX, INT64_MAX, INT64_MAX};
      const int k = static_cast<int>(w.split);
      it->second[k] = std::max(it->second[k], w.end_time);
      it->second[3 + k] = std::min(it->second[3 + k], w.start_time);
    }
    for (const auto& [node, v] : span) chrono = chrono && v[0] < v[4] && v[1] < v[5];
  }

  auto yn = [](bool b) { return b ? "ok" : "FAILED"; };
  return {interp && count_law && labels && leakage && chrono,
          std::string("interpolation ") + yn(interp) + ", window-count law " + yn(count_law) +
              ", labels vs quadratic oracle " + yn(labels) + " (" + std::to_string(checked) +
              " windows), leakage " + yn(leakage) + ", chronological order " + yn(chrono)};
}

// ---------------------------------------------------------------- 7
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "faultpred_acceptance_chain";
  fs::remove_all(root);
  const std::string cli = FAULTPRED_CLI;
  const std::string common = " --seed 5 --nodes 12 --duration 345600 --epochs 3";
  std::string files[2][5];
  for (int rep = 0; rep < 2; ++rep) {
    const fs::path d = root / std::to_string(rep);
    const std::string o = common + " --out " + d.string();
    const std::vector<std::string> steps = {
        "generate" + o,
        "preprocess" + o + " --telemetry " + (d / "telemetry.csv").string() + " --events " +
            (d / "events.csv").string(),
        "train" + o + " --dataset " + (d / "dataset.fpd").string(),
        "evaluate" + o + " --dataset " + (d / "dataset.fpd").string() + " --model " +
            (d / "model.fpm").string()};
    for (const auto& s : steps) {
      const int status = std::system((cli + " " + s + " > /dev/null 2>&1").c_str());
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return {false, "step failed: " + s};
    }
    int k = 0;
    for (const char* f : {"telemetry.csv", "dataset.fpd", "model.fpm", "loss.csv", "metrics.csv"})
      files[rep][k++] = slurp(d / f);
  }
  bool same = true;
  for (int k = 0; k < 5; ++k) same = same && !files[0][k].empty() && files[0][k] == files[1][k];
  return {same, std::string("two seeded generate->preprocess->train->evaluate runs: telemetry, "
                            "dataset, model, loss and metrics files ") +
                    (same ? "byte-identical" : "DIFFER")};
}

// ---------------------------------------------------------------- 8
Outcome equivalence_bridge() {
  fp::SeededRng rng(8);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t T = 1 + rng.below(64), H = 1 + rng.below(64);
    fp::Matrix hidden(T, H);
    for (auto& v : hidden.span()) v = rng.uniform(-1, 1);
    fp::Vector q(H);
    for (auto& v : q) v = rng.normal() * 5;
    const auto a = fp::attention_pool(hidden, fp::Matrix(H, H), q);
    const auto m = fp::mean_pool(hidden);
    for (std::size_t i = 0; i < H; ++i) worst = std::max(worst, std::abs(a.context[i] - m[i]));
  }
  return {worst <= 1e-12, "max |attention(W_a=0) - mean| " + fmt(worst, 3) +
                              " <= 1e-12 over 1000 random hidden-state matrices"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient fidelity", gradient_fidelity},
      {"metric oracles", metric_oracles},
      {"synthetic benchmark", synthetic_benchmark},
      {"ablation direction", ablation_direction},
      {"convergence shape", convergence_shape},
      {"pipeline invariants", pipeline_invariants},
      {"determinism", determinism},
      {"equivalence bridge", equivalence_bridge},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!wanted.empty() && !wanted.contains(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << id << " (" << criteria[i].first
              << "): " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
