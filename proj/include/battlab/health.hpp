#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "battlab/errors.hpp"
#include "battlab/types.hpp"

namespace battlab::health {

/// Per-cycle state-of-health percentages for one cell.
struct SoHSeries {
  std::string cell_id;
  double nominal_capacity_mAh = 0.0;
  std::vector<std::pair<int, double>> points; // (cycle_index, soh_pct), sorted
  bool overshoot = false;                     // any soh_pct > 100 (fresh-cell overshoot)
};

/// SoH(C) = a*C^2 + b*C + c fitted by least squares.
struct QuadraticFit {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double rmse_pct = 0.0;
  int n_points = 0;
};

inline constexpr double kDefaultEolThresholdPct = 80.0;

/// End-of-life solution for a fit: the first cycle after current_cycle where
/// the fitted SoH crosses the threshold. Absent when no future crossing
/// exists.
struct RULEstimate {
  QuadraticFit fit;
  int current_cycle = 0;
  double threshold_pct = kDefaultEolThresholdPct;
  std::optional<double> end_of_life_cycle; // nullopt => not reached
  std::optional<double> rul_cycles;        // end_of_life_cycle - current_cycle
};

/// soh_pct = 100 * cap_chg / nominal per record. Values above 100 are kept
/// and flagged via SoHSeries::overshoot.
SoHSeries compute_soh(const std::vector<CycleRecord>& records, double nominal_capacity_mAh);

/// Least-squares quadratic through the series. Internally the cycle axis is
/// shifted and scaled to [-1, 1] before forming the 3x3 normal equations, so
/// conditioning stays harmless for cycle counts up to at least 1e4; the
/// coefficients are mapped back to the plain C basis for reporting. Throws
/// RankError with fewer than 3 distinct cycles or a singular system.
QuadraticFit fit_quadratic(const SoHSeries& series);

/// Solve a*C^2 + b*C + (c - threshold) = 0 with the cancellation-safe
/// quadratic formula (a == 0 falls back to the linear solution) and keep the
/// smallest real root strictly beyond current_cycle. No qualifying root
/// leaves the estimate empty; that is a value, not an error.
RULEstimate solve_end_of_life(const QuadraticFit& fit, int current_cycle,
                              double threshold_pct = kDefaultEolThresholdPct);

double predict_soh(const QuadraticFit& fit, double cycle);

/// Fallback when the rated capacity is unknown: max cap_chg over the first
/// 5 cycles. Callers should label results that used this as heuristic.
double nominal_capacity_heuristic(const std::vector<CycleRecord>& records);

} // namespace battlab::health
