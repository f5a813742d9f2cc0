#include "battlab/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace battlab::anomaly {

namespace {

constexpr double kMadToSigma = 1.4826;

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double hi = v[mid];
  if (n % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

/// Centered median filter. Near the edges the window shrinks symmetrically
/// (always odd, always centered), which keeps residuals of strictly monotone
/// input exactly zero everywhere.
std::vector<double> median_filter(const std::vector<double>& v, int window) {
  const std::size_t n = v.size();
  const std::size_t half_max = static_cast<std::size_t>(window / 2);
  std::vector<double> out(n);
  std::vector<double> buf;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t half = std::min({half_max, i, n - 1 - i});
    buf.assign(v.begin() + static_cast<std::ptrdiff_t>(i - half),
               v.begin() + static_cast<std::ptrdiff_t>(i + half + 1));
    out[i] = median_of(std::move(buf));
  }
  return out;
}

/// Baseline voltage interpolated onto the trace's capacity grid. Duplicate
/// baseline capacities (plateaus) are collapsed to their mean voltage;
/// capacities outside the baseline range clamp to its end values.
std::vector<double> resample_baseline(const DischargeTrace& baseline,
                                      const DischargeTrace& trace) {
  if (baseline.samples.size() < 2)
    throw ArgumentError("baseline needs at least 2 samples");
  std::vector<std::pair<double, double>> grid; // (capacity, voltage)
  std::size_t i = 0;
  while (i < baseline.samples.size()) {
    std::size_t j = i;
    double v_sum = 0.0;
    while (j < baseline.samples.size() &&
           baseline.samples[j].capacity_mAh == baseline.samples[i].capacity_mAh) {
      v_sum += baseline.samples[j].voltage_V;
      ++j;
    }
    grid.emplace_back(baseline.samples[i].capacity_mAh, v_sum / static_cast<double>(j - i));
    i = j;
  }

  std::vector<double> expected(trace.samples.size());
  for (std::size_t k = 0; k < trace.samples.size(); ++k) {
    const double q = trace.samples[k].capacity_mAh;
    if (q <= grid.front().first) {
      expected[k] = grid.front().second;
    } else if (q >= grid.back().first) {
      expected[k] = grid.back().second;
    } else {
      const auto it = std::upper_bound(
          grid.begin(), grid.end(), q,
          [](double value, const auto& g) { return value < g.first; });
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      const double t = (q - lo.first) / (hi.first - lo.first);
      expected[k] = lo.second + t * (hi.second - lo.second);
    }
  }
  return expected;
}

} // namespace

AnomalyReport detect_anomalies(const DischargeTrace& trace, const DischargeTrace* baseline,
                               double threshold_z) {
  if (trace.samples.size() < 10)
    throw ArgumentError("anomaly detection needs at least 10 samples");
  if (!(threshold_z > 0.0)) throw ArgumentError("threshold_z must be positive");
  // an infinite threshold disables detection outright, including the
  // degenerate-scale fallback whose zscores are themselves infinite
  const bool disabled = std::isinf(threshold_z);

  AnomalyReport report;
  report.cell_id = trace.cell_id;
  report.cycle_index = trace.cycle_index;
  report.threshold_z = threshold_z;
  report.baseline_kind = baseline ? BaselineKind::reference_trace : BaselineKind::smoothed_self;

  std::vector<double> voltages(trace.samples.size());
  for (std::size_t i = 0; i < trace.samples.size(); ++i)
    voltages[i] = trace.samples[i].voltage_V;

  const std::vector<double> expected =
      baseline ? resample_baseline(*baseline, trace)
               : median_filter(voltages, kMedianFilterWindow);

  std::vector<double> residuals(voltages.size());
  for (std::size_t i = 0; i < voltages.size(); ++i) residuals[i] = voltages[i] - expected[i];

  const double med = median_of(residuals);
  std::vector<double> dev(residuals.size());
  for (std::size_t i = 0; i < residuals.size(); ++i) dev[i] = std::abs(residuals[i] - med);
  const double scale = kMadToSigma * median_of(dev);

  if (scale == 0.0) {
    for (std::size_t i = 0; i < residuals.size(); ++i) {
      if (residuals[i] == med) continue;
      report.degenerate_scale = true;
      if (disabled) continue;
      const double inf = std::numeric_limits<double>::infinity();
      report.flagged.push_back({i, residuals[i], residuals[i] > med ? inf : -inf});
    }
    return report;
  }

  if (disabled) return report;
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    const double z = (residuals[i] - med) / scale;
    if (std::abs(z) >= threshold_z) report.flagged.push_back({i, residuals[i], z});
  }
  return report;
}

DischargeTrace feedback_refine(const AnomalyReport& report, const DischargeTrace& trace) {
  if (report.cell_id != trace.cell_id || report.cycle_index != trace.cycle_index)
    throw ArgumentError("report does not refer to this trace");
  const std::size_t n = trace.samples.size();
  std::vector<bool> is_flagged(n, false);
  for (const auto& f : report.flagged) {
    if (f.sample_index >= n) throw ArgumentError("flagged index out of range");
    is_flagged[f.sample_index] = true;
  }
  if (std::all_of(is_flagged.begin(), is_flagged.end(), [](bool b) { return b; }))
    throw AllFlaggedError("no unflagged samples left to interpolate from");

  DischargeTrace out = trace;
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_flagged[i]) continue;
    std::ptrdiff_t prev = static_cast<std::ptrdiff_t>(i) - 1;
    while (prev >= 0 && is_flagged[static_cast<std::size_t>(prev)]) --prev;
    std::size_t next = i + 1;
    while (next < n && is_flagged[next]) ++next;

    if (prev < 0) {
      out.samples[i].voltage_V = trace.samples[next].voltage_V;
    } else if (next >= n) {
      out.samples[i].voltage_V = trace.samples[static_cast<std::size_t>(prev)].voltage_V;
    } else {
      const auto& lo = trace.samples[static_cast<std::size_t>(prev)];
      const auto& hi = trace.samples[next];
      const double dq = hi.capacity_mAh - lo.capacity_mAh;
      const double t =
          dq == 0.0 ? 0.5 : (trace.samples[i].capacity_mAh - lo.capacity_mAh) / dq;
      out.samples[i].voltage_V = lo.voltage_V + t * (hi.voltage_V - lo.voltage_V);
    }
  }
  return out;
}

} // namespace battlab::anomaly
