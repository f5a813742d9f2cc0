#pragma once

#include <string>
#include <utility>
#include <vector>

#include "battlab/errors.hpp"
#include "battlab/types.hpp"

namespace battlab::dva {

struct DVAPoint {
  double v_mid_V = 0.0;
  double dq_dv_mAh_per_V = 0.0;
};

/// Differential capacity curve derived from one discharge trace. Values are
/// raw signed dQ/dV (negative on discharge when Q accumulates as V falls);
/// callers plot magnitudes if they prefer.
struct DVACurve {
  std::vector<DVAPoint> points;
  std::string cell_id;
  int cycle_index = 1;
  int smoothing_window = 1;
};

inline constexpr int kDefaultSmoothingWindow = 5;

/// Adjacent-pair finite differences at interval midpoints. Consecutive
/// samples at identical voltage are collapsed first (capacities averaged) so
/// no pair divides by zero; the result is then smoothed with a centered
/// moving average (edges use the truncated window). smoothing_window must be
/// odd and >= 1; window 1 leaves the raw differences untouched.
///
/// Throws DegenerateTraceError when fewer than 2 samples survive collapsing.
DVACurve compute_dva(const DischargeTrace& trace,
                     int smoothing_window = kDefaultSmoothingWindow);

/// Charge delivered while voltage lies in [v_lo, v_hi]: sum of |dQ| over
/// sample pairs whose voltage span intersects the window, with linear
/// pro-rating of partial overlaps. Empty intersection gives 0.
double window_capacity(const DischargeTrace& trace, double v_lo, double v_hi);

/// window_capacity per trace, sorted by cycle index.
std::vector<std::pair<int, double>> fade_series(const std::vector<DischargeTrace>& traces,
                                                double v_lo, double v_hi);

} // namespace battlab::dva
