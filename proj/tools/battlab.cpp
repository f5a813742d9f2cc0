// battlab: command-line front end for the battery cycle-data toolkit.
// One binary, one subcommand per pipeline stage; every run drops its fully
// resolved configuration next to its outputs for provenance.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "battlab/anomaly.hpp"
#include "battlab/dva.hpp"
#include "battlab/errors.hpp"
#include "battlab/health.hpp"
#include "battlab/ingest.hpp"
#include "battlab/metrics.hpp"
#include "battlab/model.hpp"
#include "battlab/report.hpp"
#include "battlab/synth.hpp"
#include "battlab/train.hpp"
#include "battlab/types.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace battlab;

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_provenance(const fs::path& out_dir, const std::string& cmd, const json& resolved) {
  fs::create_directories(out_dir);
  write_json_file(out_dir / (cmd + "_config.json"), resolved);
}

/// Flat key-value config file mirroring the flags; explicit flags override it.
json load_config_json(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      std::ifstream in(argv[i + 1]);
      if (!in) throw IoError(std::string("cannot open config file ") + argv[i + 1]);
      json j;
      try {
        in >> j;
      } catch (const json::exception& e) {
        throw ParseError(std::string("config file: ") + e.what());
      }
      if (!j.is_object()) throw ParseError("config file must hold a flat JSON object");
      return j;
    }
  }
  return json::object();
}

template <typename T> void from_cfg(const json& cfg, const char* key, T& var) {
  if (cfg.contains(key)) {
    try {
      var = cfg.at(key).get<T>();
    } catch (const json::exception&) {
      throw ParseError(std::string("config key '") + key + "' has the wrong type");
    }
  }
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

/// Trace identity from the filename convention, with flag overrides.
std::pair<std::string, int> trace_identity(const std::string& path, const std::string& cell_flag,
                                           int cycle_flag) {
  std::string cell = cell_flag;
  int cycle = cycle_flag;
  if (const auto parsed = ingest::parse_trace_filename(fs::path(path).filename().string())) {
    if (cell.empty()) cell = parsed->first;
    if (cycle <= 0) cycle = parsed->second;
  }
  if (cell.empty()) cell = stem_of(path);
  if (cycle <= 0) cycle = 1;
  return {cell, cycle};
}

/// Expand --in entries: plain files pass through, directories contribute
/// their cell<N>.csv logs (the synth naming), sorted.
std::vector<std::string> expand_cycle_inputs(const std::vector<std::string>& inputs) {
  std::vector<std::string> files;
  for (const auto& entry : inputs) {
    if (fs::is_directory(entry)) {
      std::vector<std::string> found;
      for (const auto& de : fs::directory_iterator(entry)) {
        if (!de.is_regular_file()) continue;
        const std::string name = de.path().filename().string();
        if (name.rfind("cell", 0) != 0 || de.path().extension() != ".csv") continue;
        const std::string mid = name.substr(4, name.size() - 8);
        if (!mid.empty() && std::all_of(mid.begin(), mid.end(),
                                        [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
          found.push_back(de.path().string());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(entry);
    }
  }
  if (files.empty()) throw NotFoundError("no cycle-log inputs found");
  return files;
}

json fit_to_json(const health::QuadraticFit& fit) {
  return {{"a", fit.a}, {"b", fit.b}, {"c", fit.c}, {"rmse_pct", fit.rmse_pct},
          {"n_points", fit.n_points}};
}

// ---------------------------------------------------------------- synth ---

struct SynthArgs {
  int cells = 8;
  int cycles = 500;
  std::uint64_t seed = 1;
  double nominal = 1000.0;
  double noise_sd = 0.0;
  double fade_a = -4.0e-5;
  double fade_b = -0.02;
  int trace_every = 50;
  std::string out = ".";
};

int run_synth(const SynthArgs& a) {
  synth::DegradationProfile profile;
  profile.nominal_capacity_mAh = a.nominal;
  profile.fade_a = a.fade_a;
  profile.fade_b = a.fade_b;
  profile.noise_sd_mAh = a.noise_sd;
  profile.n_cycles = a.cycles;
  profile.seed = a.seed;

  const fs::path out_dir(a.out);
  write_provenance(out_dir, "synth",
                   {{"cells", a.cells}, {"cycles", a.cycles}, {"seed", a.seed},
                    {"nominal", a.nominal}, {"noise-sd", a.noise_sd}, {"fade-a", a.fade_a},
                    {"fade-b", a.fade_b}, {"trace-every", a.trace_every}, {"out", a.out}});

  const auto cells = synth::generate_cells(profile, a.cells);
  const auto shape = synth::default_trace_shape();
  for (int k = 0; k < a.cells; ++k) {
    const std::string cell_id = "cell" + std::to_string(k + 1);
    std::ofstream log(out_dir / (cell_id + ".csv"));
    ingest::write_cycles(log, cells[static_cast<std::size_t>(k)]);
    if (a.trace_every > 0) {
      for (int c = a.trace_every; c <= a.cycles; c += a.trace_every) {
        const auto trace = synth::generate_trace(profile, shape, c, cell_id);
        std::ofstream tf(out_dir /
                         (cell_id + "_cycle" + std::to_string(c) + "_discharge.csv"));
        ingest::write_trace(tf, trace);
      }
    }
  }
  std::cout << "wrote " << a.cells << " cell logs under " << out_dir.string() << "\n";
  return 0;
}

// --------------------------------------------------------------- ingest ---

struct IngestArgs {
  std::string in;
  std::string cell;
  std::string out = ".";
};

int run_ingest(const IngestArgs& a) {
  const std::string cell = a.cell.empty() ? stem_of(a.in) : a.cell;
  const fs::path out_dir(a.out);
  write_provenance(out_dir, "ingest", {{"in", a.in}, {"cell", cell}, {"out", a.out}});

  const auto result = ingest::load_cycles_file(a.in, cell);
  std::ofstream rec(out_dir / (cell + "_records.csv"));
  ingest::write_cycles(rec, result.records);
  write_json_file(out_dir / (cell + "_ingest.json"),
                  {{"cell", cell}, {"rows", result.records.size()},
                   {"skipped_rows", result.skipped_rows}});
  std::cout << cell << ": " << result.records.size() << " records, "
            << result.skipped_rows << " skipped\n";
  return 0;
}

// ------------------------------------------------------------------ dva ---

struct DvaArgs {
  std::string in;
  std::string cell;
  int cycle = 0;
  int smooth = dva::kDefaultSmoothingWindow;
  double window_lo = 2.25;
  double window_hi = 2.30;
  std::string out = ".";
};

int run_dva(const DvaArgs& a) {
  const auto [cell, cycle] = trace_identity(a.in, a.cell, a.cycle);
  const fs::path out_dir(a.out);
  write_provenance(out_dir, "dva",
                   {{"in", a.in}, {"cell", cell}, {"cycle", cycle}, {"smooth", a.smooth},
                    {"window-lo", a.window_lo}, {"window-hi", a.window_hi}, {"out", a.out}});

  const auto trace = ingest::load_trace_file(a.in, cell, cycle).trace;
  const auto curve = dva::compute_dva(trace, a.smooth);

  const std::string base = cell + "_cycle" + std::to_string(cycle);
  std::ofstream csv(out_dir / (base + "_dva.csv"));
  csv << "v_mid,dq_dv\n";
  const dva::DVAPoint* peak = &curve.points.front();
  for (const auto& p : curve.points) {
    csv << json(p.v_mid_V).dump() << ',' << json(p.dq_dv_mAh_per_V).dump() << '\n';
    if (std::abs(p.dq_dv_mAh_per_V) > std::abs(peak->dq_dv_mAh_per_V)) peak = &p;
  }
  const double window_mAh = dva::window_capacity(trace, a.window_lo, a.window_hi);
  const double total_mAh =
      trace.samples.back().capacity_mAh - trace.samples.front().capacity_mAh;
  write_json_file(out_dir / (base + "_dva.json"),
                  {{"cell", cell},
                   {"cycle", cycle},
                   {"smoothing_window", a.smooth},
                   {"peak_v", peak->v_mid_V},
                   {"peak_dqdv", peak->dq_dv_mAh_per_V},
                   {"window_capacities",
                    {{"lo", a.window_lo}, {"hi", a.window_hi}, {"window_mAh", window_mAh},
                     {"total_mAh", total_mAh}}}});
  std::cout << base << ": window [" << a.window_lo << ", " << a.window_hi << "] holds "
            << window_mAh << " mAh\n";
  return 0;
}

// ------------------------------------------------------------- soh, rul ---

struct SohArgs {
  std::string in;
  std::string cell;
  double nominal = 0.0; // 0 => heuristic
  std::string out = ".";
};

std::pair<std::vector<CycleRecord>, std::pair<double, bool>>
load_with_nominal(const std::string& path, const std::string& cell, double nominal_flag) {
  auto records = ingest::load_cycles_file(path, cell).records;
  if (records.empty()) throw ParseError(path + " holds no records");
  if (nominal_flag > 0.0) return {std::move(records), {nominal_flag, false}};
  const double heuristic = health::nominal_capacity_heuristic(records);
  return {std::move(records), {heuristic, true}};
}

int run_soh(const SohArgs& a) {
  const std::string cell = a.cell.empty() ? stem_of(a.in) : a.cell;
  const fs::path out_dir(a.out);
  write_provenance(out_dir, "soh",
                   {{"in", a.in}, {"cell", cell}, {"nominal", a.nominal}, {"out", a.out}});

  const auto [records, nominal] = load_with_nominal(a.in, cell, a.nominal);
  const auto series = health::compute_soh(records, nominal.first);

  std::ofstream csv(out_dir / (cell + "_soh.csv"));
  csv << "cycle,soh_pct\n";
  json points = json::array();
  for (const auto& [c, soh] : series.points) {
    csv << c << ',' << json(soh).dump() << '\n';
    points.push_back({c, soh});
  }
  write_json_file(out_dir / (cell + "_soh.json"),
                  {{"cell", cell},
                   {"nominal_capacity_mAh", nominal.first},
                   {"nominal_is_heuristic", nominal.second},
                   {"overshoot", series.overshoot},
                   {"points", points}});
  std::cout << cell << ": " << series.points.size() << " soh points, nominal "
            << nominal.first << (nominal.second ? " (heuristic)" : "") << "\n";
  return 0;
}

struct RulArgs {
  std::string in;
  std::string cell;
  double nominal = 0.0;
  double threshold = health::kDefaultEolThresholdPct;
  int current = 0; // 0 => last observed cycle
  std::string out = ".";
};

int run_rul(const RulArgs& a) {
  const std::string cell = a.cell.empty() ? stem_of(a.in) : a.cell;
  const fs::path out_dir(a.out);
  write_provenance(out_dir, "rul",
                   {{"in", a.in}, {"cell", cell}, {"nominal", a.nominal},
                    {"threshold", a.threshold}, {"current", a.current}, {"out", a.out}});

  const auto [records, nominal] = load_with_nominal(a.in, cell, a.nominal);
  const auto series = health::compute_soh(records, nominal.first);
  const auto fit = health::fit_quadratic(series);
  const int current = a.current > 0 ? a.current : series.points.back().first;
  const auto estimate = health::solve_end_of_life(fit, current, a.threshold);

  json j = {{"cell", cell},
            {"nominal", nominal.first},
            {"nominal_is_heuristic", nominal.second},
            {"threshold", a.threshold},
            {"current_cycle", current},
            {"fit", fit_to_json(fit)},
            {"eol_cycle", estimate.end_of_life_cycle ? json(*estimate.end_of_life_cycle) : json()},
            {"rul", estimate.rul_cycles ? json(*estimate.rul_cycles) : json()}};
  write_json_file(out_dir / (cell + "_rul.json"), j);
  if (estimate.end_of_life_cycle)
    std::cout << cell << ": eol at cycle " << *estimate.end_of_life_cycle << ", rul "
              << *estimate.rul_cycles << "\n";
  else
    std::cout << cell << ": threshold not reached by the fitted model\n";
  return 0;
}

// -------------------------------------------------------------- anomaly ---

struct AnomalyArgs {
  std::string in;
  std::string baseline;
  std::string cell;
  int cycle = 0;
  double threshold_z = anomaly::kDefaultThresholdZ;
  std::string out = ".";
};

int run_anomaly(const AnomalyArgs& a) {
  const auto [cell, cycle] = trace_identity(a.in, a.cell, a.cycle);
  const fs::path out_dir(a.out);
  write_provenance(out_dir, "anomaly",
                   {{"in", a.in}, {"baseline", a.baseline}, {"cell", cell}, {"cycle", cycle},
                    {"threshold-z", a.threshold_z}, {"out", a.out}});

  const auto trace = ingest::load_trace_file(a.in, cell, cycle).trace;
  std::optional<DischargeTrace> baseline;
  if (!a.baseline.empty()) {
    const auto [bcell, bcycle] = trace_identity(a.baseline, "", 0);
    baseline = ingest::load_trace_file(a.baseline, bcell, bcycle).trace;
  }
  const auto report =
      anomaly::detect_anomalies(trace, baseline ? &*baseline : nullptr, a.threshold_z);

  json flagged = json::array();
  for (const auto& f : report.flagged)
    flagged.push_back({{"index", f.sample_index}, {"residual_V", f.residual_V},
                       {"zscore", std::isfinite(f.zscore) ? json(f.zscore) : json()}});
  write_json_file(out_dir / (cell + "_cycle" + std::to_string(cycle) + "_anomaly.json"),
                  {{"cell", cell},
                   {"cycle", cycle},
                   {"baseline", report.baseline_kind == anomaly::BaselineKind::reference_trace
                                    ? "reference-trace"
                                    : "smoothed-self"},
                   {"threshold_z", report.threshold_z},
                   {"degenerate_scale", report.degenerate_scale},
                   {"flagged", flagged}});
  std::cout << cell << " cycle " << cycle << ": " << report.flagged.size()
            << " samples flagged\n";
  return 0;
}

// --------------------------------------------------------- train family ---

struct TrainArgs {
  std::vector<std::string> in;
  int window = 8;
  int epochs = 5;
  int batch_size = 16;
  double lr = 1e-3;
  double weight_decay = 0.01;
  std::uint64_t seed = 1;
  int d_model = 32;
  int n_heads = 4;
  int n_layers = 2;
  int d_ff = 64;
  int max_seq_len = 128;
  double dropout = 0.0;
  std::string out = ".";
};

ingest::FeatureMatrix load_features(const std::vector<std::string>& inputs, int window) {
  std::vector<std::vector<CycleRecord>> cells;
  for (const auto& file : expand_cycle_inputs(inputs))
    cells.push_back(ingest::load_cycles_file(file, stem_of(file)).records);
  return ingest::build_features(cells, window);
}

int run_train(const TrainArgs& a) {
  const fs::path out_dir(a.out);
  write_provenance(out_dir, "train",
                   {{"in", a.in}, {"window", a.window}, {"epochs", a.epochs},
                    {"batch-size", a.batch_size}, {"lr", a.lr},
                    {"weight-decay", a.weight_decay}, {"seed", a.seed},
                    {"d-model", a.d_model}, {"heads", a.n_heads}, {"layers", a.n_layers},
                    {"d-ff", a.d_ff}, {"max-seq-len", a.max_seq_len}, {"dropout", a.dropout},
                    {"out", a.out}});

  const auto features = load_features(a.in, a.window);
  model::ModelConfig cfg;
  cfg.d_model = a.d_model;
  cfg.n_heads = a.n_heads;
  cfg.n_layers = a.n_layers;
  cfg.d_ff = a.d_ff;
  cfg.max_seq_len = a.max_seq_len;
  cfg.dropout_p = a.dropout;
  cfg.input_dim = static_cast<int>(features.channels.size());

  model::TransformerRegressor regressor(cfg, a.seed);
  model::TrainOptions opts;
  opts.epochs = a.epochs;
  opts.batch_size = a.batch_size;
  opts.lr = a.lr;
  opts.weight_decay = a.weight_decay;
  opts.shuffle_seed = a.seed;
  const auto report = model::train(regressor, features, opts);

  model::save_checkpoint(out_dir / "model.json", regressor, features.channels, a.window);
  write_json_file(out_dir / "train_report.json",
                  {{"report",
                    {{"train_mse", report.train_mse}, {"test_mse", report.test_mse},
                     {"n_epochs", report.n_epochs},
                     {"parameter_count", report.parameter_count},
                     {"loss_space", "normalized-label"}}},
                   {"timing",
                    {{"wall_seconds", report.wall_seconds},
                     {"batches_per_second", report.batches_per_second}}}});
  std::cout << "trained " << report.n_epochs << " epochs; train mse "
            << report.train_mse.front() << " -> " << report.train_mse.back() << "\n";
  return 0;
}

struct PredictArgs {
  std::string model_path;
  std::vector<std::string> in;
  std::string split = "all"; // train | test | all
  std::string out = ".";
};

std::vector<std::size_t> select_rows(const ingest::FeatureMatrix& fm, const std::string& split) {
  if (split == "train") return fm.train_indices;
  if (split == "test") return fm.test_indices;
  if (split != "all") throw ArgumentError("split must be train, test or all");
  std::vector<std::size_t> rows(fm.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return rows;
}

/// Features for fresh data under a checkpoint's stored normalization.
ingest::FeatureMatrix features_for_checkpoint(const model::Checkpoint& ckpt,
                                              const std::vector<std::string>& inputs) {
  ingest::FeatureMatrix combined;
  combined.window = ckpt.window;
  combined.channels = ckpt.channels;
  for (const auto& file : expand_cycle_inputs(inputs)) {
    const auto records = ingest::load_cycles_file(file, stem_of(file)).records;
    const auto fm = ingest::build_features_using(records, ckpt.window, ckpt.channels);
    const std::size_t base = combined.rows.size();
    combined.rows.insert(combined.rows.end(), fm.rows.begin(), fm.rows.end());
    combined.labels.insert(combined.labels.end(), fm.labels.begin(), fm.labels.end());
    combined.row_refs.insert(combined.row_refs.end(), fm.row_refs.begin(), fm.row_refs.end());
    for (auto i : fm.train_indices) combined.train_indices.push_back(base + i);
    for (auto i : fm.test_indices) combined.test_indices.push_back(base + i);
  }
  return combined;
}

int run_predict(const PredictArgs& a) {
  const fs::path out_dir(a.out);
  write_provenance(out_dir, "predict",
                   {{"model", a.model_path}, {"in", a.in}, {"split", a.split}, {"out", a.out}});

  const auto ckpt = model::load_checkpoint(a.model_path);
  const auto features = features_for_checkpoint(ckpt, a.in);
  const auto rows = select_rows(features, a.split);
  const auto preds = model::predict_capacity(ckpt.model, features, rows);

  std::ofstream csv(out_dir / "predictions.csv");
  csv << "cell,cycle,label_mAh,predicted_mAh\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& [cell, cycle] = features.row_refs[rows[i]];
    csv << cell << ',' << cycle << ',' << json(features.labels[rows[i]]).dump() << ','
        << json(preds[i]).dump() << '\n';
  }
  std::cout << "predicted " << rows.size() << " rows (" << a.split << " split)\n";
  return 0;
}

struct EvaluateArgs {
  std::string model_path;
  std::vector<std::string> in;
  std::string split = "test";
  double nominal = 0.0;
  std::string out = ".";
};

int run_evaluate(const EvaluateArgs& a) {
  const fs::path out_dir(a.out);
  write_provenance(out_dir, "evaluate",
                   {{"model", a.model_path}, {"in", a.in}, {"split", a.split},
                    {"nominal", a.nominal}, {"out", a.out}});

  const auto ckpt = model::load_checkpoint(a.model_path);
  const auto features = features_for_checkpoint(ckpt, a.in);
  const auto rows = select_rows(features, a.split);
  if (rows.empty()) throw ArgumentError("selected split is empty");

  double nominal = a.nominal;
  if (nominal <= 0.0) {
    // heuristic: the cap_chg channel maximum approximates the fresh capacity
    nominal = features.channels.front().max;
  }

  constexpr int kEvalBatch = 16;
  const auto [preds, seconds] = metrics::timeit([&] {
    return model::predict_capacity(ckpt.model, features, rows);
  });
  const std::size_t n_batches = (rows.size() + kEvalBatch - 1) / kEvalBatch;
  std::vector<double> truth(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) truth[i] = features.labels[rows[i]];

  const auto result = metrics::evaluate(truth, preds, {seconds, n_batches},
                                        ckpt.model.parameter_scalars(), nominal);
  write_json_file(out_dir / "eval.json", metrics::to_json(result));

  std::vector<metrics::ComparisonRow> measured;
  measured.push_back({"transformer (this run)", result.mae_pct, seconds, false});
  const auto table = metrics::comparison_table(measured, true);
  std::ofstream(out_dir / "comparison.txt") << table.text;
  write_json_file(out_dir / "comparison.json", table.j);
  std::cout << "mse " << result.mse << ", mae " << result.mae << " mAh (" << result.mae_pct
            << "% of nominal), r2 " << result.r2 << "\n";
  return 0;
}

// --------------------------------------------------------------- report ---

struct ReportArgs {
  std::string out = ".";
};

int run_report(const ReportArgs& a) {
  const fs::path out_dir(a.out);
  // provenance written after the scan so an empty directory still errors
  const auto bundle = report::write_report(out_dir);
  write_provenance(out_dir, "report", {{"out", a.out}});
  std::cout << bundle.text;
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"battery cycle-data analytics: synthesis, health, DVA, anomaly and a "
               "sequence regressor"};
  app.require_subcommand(1);

  json cfg;
  try {
    cfg = load_config_json(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::string config_path; // consumed by CLI11 so it shows in --help

  SynthArgs synth_args;
  from_cfg(cfg, "cells", synth_args.cells);
  from_cfg(cfg, "cycles", synth_args.cycles);
  from_cfg(cfg, "seed", synth_args.seed);
  from_cfg(cfg, "nominal", synth_args.nominal);
  from_cfg(cfg, "noise-sd", synth_args.noise_sd);
  from_cfg(cfg, "fade-a", synth_args.fade_a);
  from_cfg(cfg, "fade-b", synth_args.fade_b);
  from_cfg(cfg, "trace-every", synth_args.trace_every);
  from_cfg(cfg, "out", synth_args.out);
  auto* synth_cmd = app.add_subcommand("synth", "generate synthetic cycle logs and traces");
  synth_cmd->add_option("--cells", synth_args.cells);
  synth_cmd->add_option("--cycles", synth_args.cycles);
  synth_cmd->add_option("--seed", synth_args.seed);
  synth_cmd->add_option("--nominal", synth_args.nominal);
  synth_cmd->add_option("--noise-sd", synth_args.noise_sd);
  synth_cmd->add_option("--fade-a", synth_args.fade_a);
  synth_cmd->add_option("--fade-b", synth_args.fade_b);
  synth_cmd->add_option("--trace-every", synth_args.trace_every);
  synth_cmd->add_option("--out", synth_args.out);
  synth_cmd->add_option("--config", config_path);

  IngestArgs ingest_args;
  from_cfg(cfg, "in", ingest_args.in);
  from_cfg(cfg, "cell", ingest_args.cell);
  from_cfg(cfg, "out", ingest_args.out);
  auto* ingest_cmd = app.add_subcommand("ingest", "parse and normalize a cycle log");
  ingest_cmd->add_option("--in", ingest_args.in)->required();
  ingest_cmd->add_option("--cell", ingest_args.cell);
  ingest_cmd->add_option("--out", ingest_args.out);
  ingest_cmd->add_option("--config", config_path);

  DvaArgs dva_args;
  from_cfg(cfg, "in", dva_args.in);
  from_cfg(cfg, "smooth", dva_args.smooth);
  from_cfg(cfg, "window-lo", dva_args.window_lo);
  from_cfg(cfg, "window-hi", dva_args.window_hi);
  from_cfg(cfg, "out", dva_args.out);
  auto* dva_cmd = app.add_subcommand("dva", "differential voltage analysis of a trace");
  dva_cmd->add_option("--in", dva_args.in)->required();
  dva_cmd->add_option("--cell", dva_args.cell);
  dva_cmd->add_option("--cycle", dva_args.cycle);
  dva_cmd->add_option("--smooth", dva_args.smooth);
  dva_cmd->add_option("--window-lo", dva_args.window_lo);
  dva_cmd->add_option("--window-hi", dva_args.window_hi);
  dva_cmd->add_option("--out", dva_args.out);
  dva_cmd->add_option("--config", config_path);

  SohArgs soh_args;
  from_cfg(cfg, "in", soh_args.in);
  from_cfg(cfg, "nominal", soh_args.nominal);
  from_cfg(cfg, "out", soh_args.out);
  auto* soh_cmd = app.add_subcommand("soh", "state-of-health series from a cycle log");
  soh_cmd->add_option("--in", soh_args.in)->required();
  soh_cmd->add_option("--cell", soh_args.cell);
  soh_cmd->add_option("--nominal", soh_args.nominal);
  soh_cmd->add_option("--out", soh_args.out);
  soh_cmd->add_option("--config", config_path);

  RulArgs rul_args;
  from_cfg(cfg, "in", rul_args.in);
  from_cfg(cfg, "nominal", rul_args.nominal);
  from_cfg(cfg, "threshold", rul_args.threshold);
  from_cfg(cfg, "current", rul_args.current);
  from_cfg(cfg, "out", rul_args.out);
  auto* rul_cmd = app.add_subcommand("rul", "remaining-useful-life fit and solve");
  rul_cmd->add_option("--in", rul_args.in)->required();
  rul_cmd->add_option("--cell", rul_args.cell);
  rul_cmd->add_option("--nominal", rul_args.nominal);
  rul_cmd->add_option("--threshold", rul_args.threshold);
  rul_cmd->add_option("--current", rul_args.current);
  rul_cmd->add_option("--out", rul_args.out);
  rul_cmd->add_option("--config", config_path);

  AnomalyArgs anomaly_args;
  from_cfg(cfg, "in", anomaly_args.in);
  from_cfg(cfg, "baseline", anomaly_args.baseline);
  from_cfg(cfg, "threshold-z", anomaly_args.threshold_z);
  from_cfg(cfg, "out", anomaly_args.out);
  auto* anomaly_cmd = app.add_subcommand("anomaly", "flag trace deviations");
  anomaly_cmd->add_option("--in", anomaly_args.in)->required();
  anomaly_cmd->add_option("--baseline", anomaly_args.baseline);
  anomaly_cmd->add_option("--cell", anomaly_args.cell);
  anomaly_cmd->add_option("--cycle", anomaly_args.cycle);
  anomaly_cmd->add_option("--threshold-z", anomaly_args.threshold_z);
  anomaly_cmd->add_option("--out", anomaly_args.out);
  anomaly_cmd->add_option("--config", config_path);

  TrainArgs train_args;
  from_cfg(cfg, "in", train_args.in);
  from_cfg(cfg, "window", train_args.window);
  from_cfg(cfg, "epochs", train_args.epochs);
  from_cfg(cfg, "batch-size", train_args.batch_size);
  from_cfg(cfg, "lr", train_args.lr);
  from_cfg(cfg, "weight-decay", train_args.weight_decay);
  from_cfg(cfg, "seed", train_args.seed);
  from_cfg(cfg, "d-model", train_args.d_model);
  from_cfg(cfg, "heads", train_args.n_heads);
  from_cfg(cfg, "layers", train_args.n_layers);
  from_cfg(cfg, "d-ff", train_args.d_ff);
  from_cfg(cfg, "max-seq-len", train_args.max_seq_len);
  from_cfg(cfg, "dropout", train_args.dropout);
  from_cfg(cfg, "out", train_args.out);
  auto* train_cmd = app.add_subcommand("train", "train the sequence regressor");
  train_cmd->add_option("--in", train_args.in)->required();
  train_cmd->add_option("--window", train_args.window);
  train_cmd->add_option("--epochs", train_args.epochs);
  train_cmd->add_option("--batch-size", train_args.batch_size);
  train_cmd->add_option("--lr", train_args.lr);
  train_cmd->add_option("--weight-decay", train_args.weight_decay);
  train_cmd->add_option("--seed", train_args.seed);
  train_cmd->add_option("--d-model", train_args.d_model);
  train_cmd->add_option("--heads", train_args.n_heads);
  train_cmd->add_option("--layers", train_args.n_layers);
  train_cmd->add_option("--d-ff", train_args.d_ff);
  train_cmd->add_option("--max-seq-len", train_args.max_seq_len);
  train_cmd->add_option("--dropout", train_args.dropout);
  train_cmd->add_option("--out", train_args.out);
  train_cmd->add_option("--config", config_path);

  PredictArgs predict_args;
  from_cfg(cfg, "model", predict_args.model_path);
  from_cfg(cfg, "in", predict_args.in);
  from_cfg(cfg, "split", predict_args.split);
  from_cfg(cfg, "out", predict_args.out);
  auto* predict_cmd = app.add_subcommand("predict", "run a checkpoint over cycle logs");
  predict_cmd->add_option("--model", predict_args.model_path)->required();
  predict_cmd->add_option("--in", predict_args.in)->required();
  predict_cmd->add_option("--split", predict_args.split);
  predict_cmd->add_option("--out", predict_args.out);
  predict_cmd->add_option("--config", config_path);

  EvaluateArgs eval_args;
  from_cfg(cfg, "model", eval_args.model_path);
  from_cfg(cfg, "in", eval_args.in);
  from_cfg(cfg, "split", eval_args.split);
  from_cfg(cfg, "nominal", eval_args.nominal);
  from_cfg(cfg, "out", eval_args.out);
  auto* eval_cmd = app.add_subcommand("evaluate", "score a checkpoint and emit metrics");
  eval_cmd->add_option("--model", eval_args.model_path)->required();
  eval_cmd->add_option("--in", eval_args.in)->required();
  eval_cmd->add_option("--split", eval_args.split);
  eval_cmd->add_option("--nominal", eval_args.nominal);
  eval_cmd->add_option("--out", eval_args.out);
  eval_cmd->add_option("--config", config_path);

  ReportArgs report_args;
  from_cfg(cfg, "out", report_args.out);
  auto* report_cmd = app.add_subcommand("report", "bundle prior run outputs");
  report_cmd->add_option("--out", report_args.out);
  report_cmd->add_option("--config", config_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (app.got_subcommand(synth_cmd)) return run_synth(synth_args);
    if (app.got_subcommand(ingest_cmd)) return run_ingest(ingest_args);
    if (app.got_subcommand(dva_cmd)) return run_dva(dva_args);
    if (app.got_subcommand(soh_cmd)) return run_soh(soh_args);
    if (app.got_subcommand(rul_cmd)) return run_rul(rul_args);
    if (app.got_subcommand(anomaly_cmd)) return run_anomaly(anomaly_args);
    if (app.got_subcommand(train_cmd)) return run_train(train_args);
    if (app.got_subcommand(predict_cmd)) return run_predict(predict_args);
    if (app.got_subcommand(eval_cmd)) return run_evaluate(eval_args);
    if (app.got_subcommand(report_cmd)) return run_report(report_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
