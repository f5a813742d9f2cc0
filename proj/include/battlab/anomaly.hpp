#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "battlab/errors.hpp"
#include "battlab/types.hpp"

namespace battlab::anomaly {

enum class BaselineKind { reference_trace, smoothed_self };

struct FlaggedSample {
  std::size_t sample_index = 0;
  double residual_V = 0.0;
  double zscore = 0.0; // |zscore| >= threshold_z for every flagged sample
};

struct AnomalyReport {
  std::string cell_id;
  int cycle_index = 1;
  std::vector<FlaggedSample> flagged; // sorted by sample_index
  double threshold_z = 0.0;
  BaselineKind baseline_kind = BaselineKind::smoothed_self;
  /// MAD collapsed to zero while some residuals differ from the median: the
  /// robust scale is undefined, so exactly those deviating samples were
  /// flagged (their zscores are +/-inf). A constant residual field with
  /// isolated outliers is the prime detectable case, so this warns rather
  /// than fails.
  bool degenerate_scale = false;
};

inline constexpr double kDefaultThresholdZ = 3.0;
inline constexpr int kMedianFilterWindow = 11;

/// Flag samples whose voltage deviates from the expected pattern.
///
/// expected_i is the baseline's voltage linearly interpolated onto the
/// trace's capacity grid, or, without a baseline, a centered median filter
/// of the trace itself (window 11, shrunk symmetrically near the edges so
/// a strictly monotone trace has identically zero residuals). Residuals are
/// scored as robust z = (r - median(r)) / (1.4826 * MAD) and indices with
/// |z| >= threshold_z are flagged. An infinite threshold disables detection
/// entirely, degenerate fallback included.
///
/// When noise sits below the trace's voltage grid spacing the samples stay
/// locally sorted, the median filter reproduces them exactly and MAD
/// collapses to zero: the degenerate fallback then flags every deviating
/// sample. A reference-trace baseline avoids that regime.
///
/// Throws ArgumentError when the trace has fewer than 10 samples or
/// threshold_z is not positive.
AnomalyReport detect_anomalies(const DischargeTrace& trace,
                               const DischargeTrace* baseline = nullptr,
                               double threshold_z = kDefaultThresholdZ);

/// Clean a trace by replacing flagged voltages with the linear interpolation
/// (in capacity) of the nearest unflagged neighbors; flagged runs touching an
/// end take the nearest unflagged value. The report must refer to this trace.
/// Throws AllFlaggedError when nothing unflagged remains.
DischargeTrace feedback_refine(const AnomalyReport& report, const DischargeTrace& trace);

} // namespace battlab::anomaly
