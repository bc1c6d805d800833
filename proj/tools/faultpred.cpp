// faultpred: command-line front end for the telemetry fault predictor.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "faultpred/dataset_io.hpp"
#include "faultpred/errors.hpp"
#include "faultpred/evalharness.hpp"
#include "faultpred/model_io.hpp"
#include "faultpred/run_config.hpp"
#include "faultpred/synthgen.hpp"
#include "faultpred/training.hpp"

namespace fp = faultpred;

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw fp::IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw fp::IoError("error while writing '" + path + "'");
}

std::ifstream open_input(const std::string& path, std::string_view what) {
  if (path.empty()) throw fp::ConfigError(std::string(what) + " path not set");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw fp::IoError("cannot open " + std::string(what) + " '" + path + "'");
  return in;
}

void print_epoch(const fp::EpochLoss& e) {
  std::cerr << "epoch " << std::setw(3) << e.epoch << "  train_loss " << std::fixed
            << std::setprecision(6) << e.train_loss << "  val_loss " << e.val_loss << '\n';
  std::cerr.unsetf(std::ios::floatfield);
}

void print_report(const fp::MetricsReport& r) {
  std::cout << std::fixed << std::setprecision(4) << r.pooling << ": accuracy " << r.accuracy
            << "  f1 " << r.f1 << "  auc " << r.auc << "  (tp " << r.confusion.tp << ", fp "
            << r.confusion.fp << ", tn " << r.confusion.tn << ", fn " << r.confusion.fn << ", n "
            << r.n << ")\n";
  std::cout.unsetf(std::ios::floatfield);
}

int cmd_generate(const fp::RunConfig& cfg) {
  const auto scenario = cfg.scenario_config();
  std::cerr << fp::describe(scenario).to_text();
  const auto data = fp::generate(scenario);
  write_text(cfg.out_path("telemetry.csv"), data.telemetry_csv);
  write_text(cfg.out_path("events.csv"), data.events_csv);
  write_text(cfg.out_path("manifest.txt"), data.manifest);
  std::cout << "generated " << scenario.node_count << " nodes, " << data.faults.size()
            << " faults -> " << cfg.out << '\n';
  return 0;
}

// Prefixes format errors with the file they came from.
template <typename F>
auto parse_file(const std::string& path, std::string_view what, F parse) {
  auto in = open_input(path, what);
  try {
    return parse(in);
  } catch (const fp::FormatError& e) {
    throw fp::FormatError(path + ": " + e.what());
  }
}

int cmd_preprocess(const fp::RunConfig& cfg, bool strict) {
  auto telemetry = parse_file(cfg.telemetry, "telemetry csv",
                              [](std::istream& in) { return fp::parse_telemetry(in); });
  auto events = parse_file(cfg.events, "events csv",
                           [](std::istream& in) { return fp::parse_fault_events(in); });
  for (const auto& e : telemetry.errors) {
    std::cerr << cfg.telemetry << ":" << e.line << ": " << e.message << '\n';
  }
  for (const auto& e : events.errors) {
    std::cerr << cfg.events << ":" << e.line << ": " << e.message << '\n';
  }
  if (!telemetry.errors.empty() || !events.errors.empty()) {
    std::cerr << "skipped " << telemetry.errors.size() << " telemetry rows and "
              << events.errors.size() << " event rows\n";
    if (strict) throw fp::FormatError("malformed rows present and --strict given");
  }
  fp::PipelineReport rep;
  const auto ds = fp::build_dataset(telemetry.rows, events.rows, cfg.pipeline, &rep);
  fp::save_dataset(ds, cfg.out_path("dataset.fpd"));
  {
    std::ofstream out(cfg.out_path("norm_stats.csv"), std::ios::binary | std::ios::trunc);
    if (!out) throw fp::IoError("cannot write " + cfg.out_path("norm_stats.csv"));
    fp::write_norm_stats_csv(ds.norm, out);
  }
  std::cout << "nodes " << rep.nodes << ", records " << rep.records << ", filled "
            << rep.filled_values << ", excluded windows " << rep.excluded_windows
            << ", unmatched events " << rep.unmatched_events << '\n';
  for (auto s : {fp::Split::kTrain, fp::Split::kVal, fp::Split::kTest}) {
    std::cout << fp::to_string(s) << ": " << ds.count(s) << " windows, " << ds.positives(s)
              << " positive\n";
  }
  return 0;
}

fp::WindowedDataset load_dataset_for(const fp::RunConfig& cfg) {
  if (cfg.dataset.empty()) throw fp::ConfigError("dataset path not set (use --dataset)");
  return fp::load_dataset(cfg.dataset);
}

int cmd_train(const fp::RunConfig& cfg) {
  const auto ds = load_dataset_for(cfg);
  const auto tc = cfg.train_config();
  const auto result = fp::train(ds, tc, print_epoch);
  fp::SavedModel model{result.params, tc.pooling, ds.norm};
  fp::save_model(model, cfg.out_path("model.fpm"));
  fp::emit_loss_curve(result.history, cfg.out_path("loss.csv"));
  std::cout << "best epoch " << result.best_epoch << ", class weights (" << result.weights.positive
            << ", " << result.weights.negative << ") -> " << cfg.out_path("model.fpm") << '\n';
  return 0;
}

int cmd_evaluate(const fp::RunConfig& cfg) {
  if (cfg.model.empty()) throw fp::ConfigError("model path not set (use --model)");
  const auto model = fp::load_model(cfg.model);
  const auto ds = load_dataset_for(cfg);
  const auto ev = fp::evaluate(model.params, model.pooling, ds, cfg.split, cfg.threshold);
  const fp::MetricsReport reports[] = {ev.report};
  fp::emit_report(reports, cfg.out_path("metrics.csv"));
  print_report(ev.report);
  return 0;
}

int cmd_ablate(const fp::RunConfig& cfg) {
  const auto ds = load_dataset_for(cfg);
  const auto rep = fp::ablation_run(ds, cfg.train_config(), cfg.threshold, print_epoch);
  const fp::MetricsReport reports[] = {rep.attention.evaluation.report,
                                       rep.mean.evaluation.report};
  fp::emit_report(reports, cfg.out_path("ablation_metrics.csv"));
  fp::emit_loss_curve(rep.attention.training.history, cfg.out_path("loss_attention.csv"));
  fp::emit_loss_curve(rep.mean.training.history, cfg.out_path("loss_mean.csv"));
  for (const auto& r : reports) print_report(r);
  std::cout << "delta (attention - mean): accuracy " << rep.delta_accuracy << "  f1 "
            << rep.delta_f1 << "  auc " << rep.delta_auc << '\n';
  return 0;
}

int cmd_predict(const fp::RunConfig& cfg) {
  if (cfg.model.empty()) throw fp::ConfigError("model path not set (use --model)");
  const auto model = fp::load_model(cfg.model);
  const auto raw = parse_file(cfg.window, "window csv",
                              [](std::istream& in) { return fp::parse_window_csv(in); });
  if (raw.rows() != model.params.dims.window_len) {
    throw fp::ShapeError(cfg.window + ": window has " + std::to_string(raw.rows()) +
                         " rows, model expects " + std::to_string(model.params.dims.window_len));
  }
  const auto x = fp::apply_norm(raw, model.norm);
  const auto fwd = fp::model_forward(x, model.params, model.pooling);
  std::cout << "probability=" << fwd.probability << '\n'
            << "prediction=" << (fwd.probability >= cfg.threshold ? 1 : 0) << '\n';
  return 0;
}

int cmd_gradcheck(const fp::RunConfig& cfg, std::size_t seeds) {
  const fp::ModelDims dims{4, 8, 6, 8};
  fp::GradCheckOptions opts;
  opts.pooling = cfg.train.pooling;
  std::map<std::string, double> worst;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < seeds; ++i) {
    const auto rep = fp::gradient_check(dims, cfg.seed + i, opts);
    for (const auto& t : rep.tensors) {
      if (!worst.contains(t.name)) order.push_back(t.name);
      worst[t.name] = std::max(worst[t.name], t.relative_error);
    }
  }
  bool ok = true;
  std::cout << "gradient check: T=6 D=4 H=8 head=8, pooling " << fp::to_string(opts.pooling)
            << ", " << seeds << " seeds, tolerance " << opts.tolerance << '\n';
  for (const auto& name : order) {
    const bool pass = worst[name] <= opts.tolerance;
    ok = ok && pass;
    std::cout << std::left << std::setw(26) << name << std::scientific << std::setprecision(3)
              << worst[name] << (pass ? "  ok" : "  FAIL") << '\n';
    std::cout.unsetf(std::ios::floatfield);
  }
  if (!ok) throw fp::NumericError("gradient check failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fault prediction for distributed-system telemetry"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "key = value config file");
  std::map<std::string, std::string> flag_values;
  std::map<std::string, CLI::Option*> flag_opts;
  for (const auto& k : fp::RunConfig::keys()) {
    std::string flag = "--" + std::string(k.name);
    for (auto& ch : flag) {
      if (ch == '_') ch = '-';
    }
    flag_opts[std::string(k.name)] =
        app.add_option(flag, flag_values[std::string(k.name)], std::string(k.help));
  }

  auto* generate = app.add_subcommand("generate", "write synthetic telemetry, events and manifest");
  bool strict = false;
  auto* preprocess = app.add_subcommand("preprocess", "build the windowed dataset");
  preprocess->add_flag("--strict", strict, "fail on malformed CSV rows");
  auto* train = app.add_subcommand("train", "train a model on a windowed dataset");
  auto* evaluate = app.add_subcommand("evaluate", "score a split and write metrics.csv");
  auto* ablate = app.add_subcommand("ablate", "train attention and mean-pooling arms and compare");
  auto* predict = app.add_subcommand("predict", "score one raw window CSV");
  std::size_t seeds = 20;
  auto* gradcheck = app.add_subcommand("gradcheck", "verify analytic gradients numerically");
  gradcheck->add_option("--seeds", seeds, "number of random seeds")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code == 0) return 0;
    std::cerr << '\n' << app.help();
    return static_cast<int>(fp::ExitCode::kUsage);
  }

  try {
    fp::RunConfig cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const auto& [key, opt] : flag_opts) {
      if (opt->count() > 0) cfg.set(key, flag_values[key]);
    }
    cfg.validate();
    if (!cfg.out.empty()) std::filesystem::create_directories(cfg.out);

    if (generate->parsed()) return cmd_generate(cfg);
    if (preprocess->parsed()) return cmd_preprocess(cfg, strict);
    if (train->parsed()) return cmd_train(cfg);
    if (evaluate->parsed()) return cmd_evaluate(cfg);
    if (ablate->parsed()) return cmd_ablate(cfg);
    if (predict->parsed()) return cmd_predict(cfg);
    if (gradcheck->parsed()) return cmd_gradcheck(cfg, seeds);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(fp::ExitCode::kData);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(fp::exit_code_for(e));
  }
  std::cerr << app.help();
  return static_cast<int>(fp::ExitCode::kUsage);
}
