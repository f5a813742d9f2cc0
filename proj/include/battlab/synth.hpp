#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "battlab/errors.hpp"
#include "battlab/types.hpp"

namespace battlab::synth {

/// Quadratic capacity-fade profile: SoH(C) = 100 + fade_b*C + fade_a*C^2,
/// so a fresh cell sits at 100%. Valid profiles keep SoH in (0, 100] for
/// every cycle in [1, n_cycles]. Defaults reach 80% at cycle 500.
struct DegradationProfile {
  double nominal_capacity_mAh = 1000.0;
  double fade_a = -4.0e-5; // per-cycle^2 SoH coefficient
  double fade_b = -0.02;   // per-cycle SoH coefficient
  double noise_sd_mAh = 0.0;
  int n_cycles = 500;
  std::uint64_t seed = 1;
};

double profile_soh_pct(const DegradationProfile& profile, double cycle);

/// Throws ProfileError unless SoH stays in (0, 100] on [1, n_cycles].
void validate_profile(const DegradationProfile& profile);

/// Generate per-cell cycle series. Cell k (0-based) draws from seed + k;
/// cap_chg(C) = nominal * SoH(C)/100 plus Gaussian noise (clamped at 0) and
/// cap_dchg = 0.99 * cap_chg with ratio noise sd 0.001 when noise_sd_mAh > 0
/// (exact 0.99 otherwise). Cells are named "cell1".."cellN". Deterministic
/// for a given (profile, n_cells).
std::vector<std::vector<CycleRecord>> generate_cells(const DegradationProfile& profile,
                                                     int n_cells);

/// Voltage geometry of a synthetic discharge: charge accumulates along a
/// logistic Q(V) centered on plateau_center_V, strictly decreasing in V.
/// plateau_sharpness is the fresh-cell (cycle 1) logistic steepness; aging
/// scales it down through the calibrated schedule below.
struct TraceShape {
  double v_max_V = 3.0;
  double v_min_V = 1.4;
  double plateau_center_V = 2.275;
  double plateau_sharpness = 1.0;
};

/// Shape whose sharpness is the calibrated fresh-cell value.
TraceShape default_trace_shape();

inline constexpr int kTraceSampleCount = 201;

/// Calibration anchors: with the default profile and shape, the charge
/// delivered in [2.25, 2.30] V is 40 mAh at cycle 50 and 28 mAh at cycle 500.
/// Both window fractions are unreachable from any single fixed logistic, so
/// the plateau sharpness itself fades: it is solved numerically at the two
/// anchor cycles and interpolated linearly in between (peak flattening with
/// age). The solved values are frozen by a regression test.
inline constexpr double kAnchorEarlyCycle = 50.0;
inline constexpr double kAnchorEarlyWindow_mAh = 40.0;
inline constexpr double kAnchorLateCycle = 500.0;
inline constexpr double kAnchorLateWindow_mAh = 28.0;
inline constexpr double kWindowLoV = 2.25;
inline constexpr double kWindowHiV = 2.30;

/// Sharpness the default shape uses at a given cycle.
double calibrated_sharpness(double cycle_index);

/// Synthesize one discharge trace for the profile's cell at cycle_index.
/// kTraceSampleCount samples on a uniform voltage grid from v_max down to
/// v_min; total capacity equals nominal * SoH(cycle)/100 exactly.
DischargeTrace generate_trace(const DegradationProfile& profile, const TraceShape& shape,
                              int cycle_index, const std::string& cell_id = "synth");

enum class AnomalyKind { spike, sag, step };

/// Copy the trace with a voltage perturbation applied: spike adds
/// magnitude_V at `location`, sag subtracts |magnitude_V| there, step adds
/// magnitude_V to every sample from `location` on. The touched index range
/// is recorded in the copy's perturbed_range. Throws IndexError when
/// location is out of range.
DischargeTrace inject_anomaly(const DischargeTrace& trace, AnomalyKind kind,
                              double magnitude_V, std::size_t location);

} // namespace battlab::synth
