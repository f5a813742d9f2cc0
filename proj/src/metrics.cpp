#include "battlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace battlab::metrics {

EvalResult evaluate(const std::vector<double>& y_true, const std::vector<double>& y_pred,
                    Timing timing, std::size_t parameter_count,
                    std::optional<double> nominal_capacity_mAh) {
  if (y_true.empty()) throw ArgumentError("evaluate needs at least one sample");
  if (y_true.size() != y_pred.size())
    throw ArgumentError("y_true and y_pred lengths differ");
  if (timing.seconds < 0.0) throw ArgumentError("negative timing");

  EvalResult r;
  r.n = y_true.size();
  r.parameter_count = parameter_count;
  r.inference_seconds = timing.seconds;

  double mean = 0.0;
  for (double y : y_true) mean += y;
  mean /= static_cast<double>(r.n);

  double ss_res = 0.0, abs_sum = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < r.n; ++i) {
    const double d = y_true[i] - y_pred[i];
    ss_res += d * d;
    abs_sum += std::abs(d);
    const double t = y_true[i] - mean;
    ss_tot += t * t;
  }
  r.mse = ss_res / static_cast<double>(r.n);
  r.mae = abs_sum / static_cast<double>(r.n);

  if (ss_tot == 0.0) {
    r.r2_degenerate = true;
    r.r2 = ss_res == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
  } else {
    r.r2 = 1.0 - ss_res / ss_tot;
  }

  if (nominal_capacity_mAh) {
    if (*nominal_capacity_mAh <= 0.0) throw ArgumentError("nominal capacity must be positive");
    r.has_mae_pct = true;
    r.mae_pct = 100.0 * r.mae / *nominal_capacity_mAh;
  }

  if (timing.seconds == 0.0) {
    r.timing_degenerate = true;
    r.batches_per_second = 0.0;
  } else {
    r.batches_per_second = static_cast<double>(timing.n_batches) / timing.seconds;
  }
  return r;
}

const ReferenceRun& reference_run() {
  static const ReferenceRun run;
  return run;
}

const std::vector<ComparisonRow>& reference_rows() {
  static const std::vector<ComparisonRow> rows = {
      {"GPR", 21.00, 34.50, true},
      {"RD", 8.74, 27.50, true},
      {"SVR", 4.27, 22.00, true},
      {"CNN", 10.31, 30.00, true},
      {"LLM", 0.81, 61.17, true},
  };
  return rows;
}

ComparisonTable comparison_table(std::vector<ComparisonRow> measured, bool include_reference) {
  std::vector<ComparisonRow> rows = std::move(measured);
  if (include_reference)
    for (const auto& r : reference_rows()) rows.push_back(r);
  if (rows.empty()) throw ArgumentError("comparison table has no rows");

  std::stable_sort(rows.begin(), rows.end(),
                   [](const ComparisonRow& a, const ComparisonRow& b) {
                     return a.mae_pct < b.mae_pct;
                   });

  std::size_t name_w = 6; // "Method"
  for (const auto& r : rows) name_w = std::max(name_w, r.method_name.size());

  ComparisonTable table;
  char line[256];
  std::snprintf(line, sizeof(line), "%-*s  %8s  %8s  %s\n", static_cast<int>(name_w),
                "Method", "MAE(%)", "Time(s)", "Source");
  table.text = line;
  table.j = nlohmann::json::array();
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-*s  %8.2f  %8.2f  %s\n", static_cast<int>(name_w),
                  r.method_name.c_str(), r.mae_pct, r.time_seconds,
                  r.paper_reported ? "paper-reported" : "measured");
    table.text += line;
    table.j.push_back({{"method", r.method_name},
                       {"mae_pct", r.mae_pct},
                       {"time_seconds", r.time_seconds},
                       {"source", r.paper_reported ? "paper-reported" : "measured"}});
  }
  return table;
}

nlohmann::json to_json(const EvalResult& r) {
  nlohmann::json j;
  j["result"] = {
      {"mse", r.mse},
      {"mae", r.mae},
      {"mae_pct", r.has_mae_pct ? nlohmann::json(r.mae_pct) : nlohmann::json()},
      {"r2", std::isfinite(r.r2) ? nlohmann::json(r.r2) : nlohmann::json()},
      {"r2_degenerate", r.r2_degenerate},
      {"n", r.n},
      {"parameter_count", r.parameter_count},
  };
  j["timing"] = {
      {"inference_seconds", r.inference_seconds},
      {"batches_per_second", r.batches_per_second},
      {"timing_degenerate", r.timing_degenerate},
  };
  return j;
}

} // namespace battlab::metrics
