#include "battlab/synth.hpp"

#include <algorithm>
#include <cmath>

#include "battlab/random.hpp"

namespace battlab::synth {

namespace {

constexpr double kDchgRatio = 0.99;
constexpr double kDchgRatioNoiseSd = 0.001;
constexpr double kMinSharpness = 0.05;
constexpr double kMaxSharpness = 400.0;

double logistic(double v, double center, double k) {
  return 1.0 / (1.0 + std::exp(k * (v - center)));
}

/// Fraction of total charge delivered inside [kWindowLoV, kWindowHiV] for the
/// default geometry at sharpness k. Increasing in k: a sharper plateau
/// concentrates charge at the center, which lies inside the window.
double window_fraction(double k) {
  const TraceShape g; // default geometry; sharpness comes from `k`
  const double denom = logistic(g.v_min_V, g.plateau_center_V, k) -
                       logistic(g.v_max_V, g.plateau_center_V, k);
  const double num =
      logistic(kWindowLoV, g.plateau_center_V, k) - logistic(kWindowHiV, g.plateau_center_V, k);
  return num / denom;
}

double solve_sharpness_for_fraction(double target) {
  double lo = kMinSharpness, hi = kMaxSharpness;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (window_fraction(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct SharpnessAnchors {
  double early; // sharpness at kAnchorEarlyCycle
  double late;  // sharpness at kAnchorLateCycle
};

const SharpnessAnchors& sharpness_anchors() {
  static const SharpnessAnchors anchors = [] {
    const DegradationProfile defaults;
    const double cap_early =
        defaults.nominal_capacity_mAh * profile_soh_pct(defaults, kAnchorEarlyCycle) / 100.0;
    const double cap_late =
        defaults.nominal_capacity_mAh * profile_soh_pct(defaults, kAnchorLateCycle) / 100.0;
    return SharpnessAnchors{
        solve_sharpness_for_fraction(kAnchorEarlyWindow_mAh / cap_early),
        solve_sharpness_for_fraction(kAnchorLateWindow_mAh / cap_late),
    };
  }();
  return anchors;
}

} // namespace

double profile_soh_pct(const DegradationProfile& profile, double cycle) {
  return 100.0 + profile.fade_b * cycle + profile.fade_a * cycle * cycle;
}

void validate_profile(const DegradationProfile& profile) {
  if (profile.nominal_capacity_mAh <= 0.0)
    throw ProfileError("nominal capacity must be positive");
  if (profile.noise_sd_mAh < 0.0) throw ProfileError("noise sd must be non-negative");
  if (profile.n_cycles < 1) throw ProfileError("n_cycles must be >= 1");
  for (int c = 1; c <= profile.n_cycles; ++c) {
    const double soh = profile_soh_pct(profile, c);
    if (!(soh > 0.0 && soh <= 100.0))
      throw ProfileError("SoH leaves (0, 100] at cycle " + std::to_string(c) + " (value " +
                         std::to_string(soh) + ")");
  }
}

std::vector<std::vector<CycleRecord>> generate_cells(const DegradationProfile& profile,
                                                     int n_cells) {
  validate_profile(profile);
  if (n_cells < 1) throw ArgumentError("n_cells must be >= 1");

  std::vector<std::vector<CycleRecord>> cells;
  cells.reserve(static_cast<std::size_t>(n_cells));
  for (int k = 0; k < n_cells; ++k) {
    Rng rng(profile.seed + static_cast<std::uint64_t>(k));
    std::vector<CycleRecord> records;
    records.reserve(static_cast<std::size_t>(profile.n_cycles));
    const std::string cell_id = "cell" + std::to_string(k + 1);
    for (int c = 1; c <= profile.n_cycles; ++c) {
      CycleRecord rec;
      rec.cell_id = cell_id;
      rec.cycle_index = c;
      double cap = profile.nominal_capacity_mAh * profile_soh_pct(profile, c) / 100.0;
      double ratio = kDchgRatio;
      if (profile.noise_sd_mAh > 0.0) {
        cap += rng.gaussian(0.0, profile.noise_sd_mAh);
        ratio += rng.gaussian(0.0, kDchgRatioNoiseSd);
      }
      rec.cap_chg_mAh = std::max(0.0, cap);
      rec.cap_dchg_mAh = std::max(0.0, rec.cap_chg_mAh * ratio);
      records.push_back(std::move(rec));
    }
    cells.push_back(std::move(records));
  }
  return cells;
}

TraceShape default_trace_shape() {
  TraceShape shape;
  shape.plateau_sharpness = calibrated_sharpness(1.0);
  return shape;
}

double calibrated_sharpness(double cycle_index) {
  const SharpnessAnchors& a = sharpness_anchors();
  const double slope = (a.late - a.early) / (kAnchorLateCycle - kAnchorEarlyCycle);
  const double k = a.early + (cycle_index - kAnchorEarlyCycle) * slope;
  return std::clamp(k, kMinSharpness, kMaxSharpness);
}

DischargeTrace generate_trace(const DegradationProfile& profile, const TraceShape& shape,
                              int cycle_index, const std::string& cell_id) {
  validate_profile(profile);
  if (cycle_index < 1 || cycle_index > profile.n_cycles)
    throw ArgumentError("cycle_index outside [1, n_cycles]");
  if (!(shape.v_max_V > shape.v_min_V))
    throw ArgumentError("trace shape needs v_max > v_min");
  if (!(shape.plateau_center_V > shape.v_min_V && shape.plateau_center_V < shape.v_max_V))
    throw ArgumentError("plateau center must lie inside (v_min, v_max)");
  if (!(shape.plateau_sharpness > 0.0))
    throw ArgumentError("plateau sharpness must be positive");

  const double total_mAh =
      profile.nominal_capacity_mAh * profile_soh_pct(profile, cycle_index) / 100.0;
  // Aging schedule, scaled so a custom fresh-cell sharpness shifts the whole
  // curve family.
  const double k_eff = std::max(
      kMinSharpness,
      shape.plateau_sharpness * calibrated_sharpness(cycle_index) / calibrated_sharpness(1.0));

  const double l_max = logistic(shape.v_max_V, shape.plateau_center_V, k_eff);
  const double l_min = logistic(shape.v_min_V, shape.plateau_center_V, k_eff);
  const double denom = l_min - l_max;

  DischargeTrace trace;
  trace.cell_id = cell_id;
  trace.cycle_index = cycle_index;
  trace.samples.reserve(kTraceSampleCount);
  for (int i = 0; i < kTraceSampleCount; ++i) {
    const double t = static_cast<double>(i) / (kTraceSampleCount - 1);
    const double v = shape.v_max_V + (shape.v_min_V - shape.v_max_V) * t;
    const double q =
        total_mAh * (logistic(v, shape.plateau_center_V, k_eff) - l_max) / denom;
    trace.samples.push_back({v, q});
  }
  // Grid endpoints hit 0 and total exactly; pin them against rounding.
  trace.samples.front().capacity_mAh = 0.0;
  trace.samples.back().capacity_mAh = total_mAh;
  return trace;
}

DischargeTrace inject_anomaly(const DischargeTrace& trace, AnomalyKind kind,
                              double magnitude_V, std::size_t location) {
  if (location >= trace.samples.size())
    throw IndexError("anomaly location " + std::to_string(location) + " out of range for " +
                     std::to_string(trace.samples.size()) + " samples");
  if (!std::isfinite(magnitude_V)) throw ArgumentError("magnitude must be finite");

  DischargeTrace out = trace;
  switch (kind) {
  case AnomalyKind::spike:
    out.samples[location].voltage_V += magnitude_V;
    out.perturbed_range = {{location, location}};
    break;
  case AnomalyKind::sag:
    out.samples[location].voltage_V -= std::abs(magnitude_V);
    out.perturbed_range = {{location, location}};
    break;
  case AnomalyKind::step:
    for (std::size_t i = location; i < out.samples.size(); ++i)
      out.samples[i].voltage_V += magnitude_V;
    out.perturbed_range = {{location, out.samples.size() - 1}};
    break;
  }
  return out;
}

} // namespace battlab::synth
