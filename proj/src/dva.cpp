#include "battlab/dva.hpp"

#include <algorithm>
#include <cmath>

namespace battlab::dva {

namespace {

/// Collapse consecutive runs of identical voltage into one sample with the
/// run's mean capacity. Measurement plateaus are physical; dividing by their
/// zero voltage delta is not.
std::vector<TraceSample> collapse_voltage_runs(const std::vector<TraceSample>& samples) {
  std::vector<TraceSample> out;
  std::size_t i = 0;
  while (i < samples.size()) {
    std::size_t j = i;
    double cap_sum = 0.0;
    while (j < samples.size() && samples[j].voltage_V == samples[i].voltage_V) {
      cap_sum += samples[j].capacity_mAh;
      ++j;
    }
    out.push_back({samples[i].voltage_V, cap_sum / static_cast<double>(j - i)});
    i = j;
  }
  return out;
}

} // namespace

DVACurve compute_dva(const DischargeTrace& trace, int smoothing_window) {
  if (smoothing_window < 1 || smoothing_window % 2 == 0)
    throw ArgumentError("smoothing window must be odd and >= 1");

  const auto collapsed = collapse_voltage_runs(trace.samples);
  if (collapsed.size() < 2)
    throw DegenerateTraceError("trace collapses to fewer than 2 distinct voltages");

  std::vector<double> raw(collapsed.size() - 1);
  DVACurve curve;
  curve.cell_id = trace.cell_id;
  curve.cycle_index = trace.cycle_index;
  curve.smoothing_window = smoothing_window;
  curve.points.resize(raw.size());
  for (std::size_t i = 0; i + 1 < collapsed.size(); ++i) {
    const auto& s0 = collapsed[i];
    const auto& s1 = collapsed[i + 1];
    curve.points[i].v_mid_V = 0.5 * (s0.voltage_V + s1.voltage_V);
    raw[i] = (s1.capacity_mAh - s0.capacity_mAh) / (s1.voltage_V - s0.voltage_V);
  }

  const std::size_t half = static_cast<std::size_t>(smoothing_window / 2);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(raw.size() - 1, i + half);
    double sum = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) sum += raw[j];
    curve.points[i].dq_dv_mAh_per_V = sum / static_cast<double>(hi - lo + 1);
  }
  return curve;
}

double window_capacity(const DischargeTrace& trace, double v_lo, double v_hi) {
  if (!(v_lo < v_hi)) throw ArgumentError("window needs v_lo < v_hi");

  double total = 0.0;
  for (std::size_t i = 0; i + 1 < trace.samples.size(); ++i) {
    const auto& s0 = trace.samples[i];
    const auto& s1 = trace.samples[i + 1];
    const double seg_lo = std::min(s0.voltage_V, s1.voltage_V);
    const double seg_hi = std::max(s0.voltage_V, s1.voltage_V);
    const double dq = std::abs(s1.capacity_mAh - s0.capacity_mAh);
    if (seg_lo == seg_hi) {
      // zero-width segment: counts fully when it sits inside the window
      if (seg_lo >= v_lo && seg_lo <= v_hi) total += dq;
      continue;
    }
    const double overlap = std::min(seg_hi, v_hi) - std::max(seg_lo, v_lo);
    if (overlap <= 0.0) continue;
    total += dq * overlap / (seg_hi - seg_lo);
  }
  return total;
}

std::vector<std::pair<int, double>> fade_series(const std::vector<DischargeTrace>& traces,
                                                double v_lo, double v_hi) {
  if (traces.empty()) throw ArgumentError("fade_series needs at least one trace");
  std::vector<std::pair<int, double>> series;
  series.reserve(traces.size());
  for (const auto& t : traces)
    series.emplace_back(t.cycle_index, window_capacity(t, v_lo, v_hi));
  std::sort(series.begin(), series.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return series;
}

} // namespace battlab::dva
