#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace battlab {

/// One summarized charge/discharge cycle of one cell.
/// cycle_index starts at 1 and is strictly increasing within a cell's series;
/// capacities are finite and non-negative.
struct CycleRecord {
  std::string cell_id;
  int cycle_index = 1;
  double cap_chg_mAh = 0.0;
  double cap_dchg_mAh = 0.0;
  std::optional<double> energy_mWh;
  std::optional<double> temperature_C;
};

struct TraceSample {
  double voltage_V = 0.0;
  double capacity_mAh = 0.0;
};

/// Instantaneous (voltage, cumulative capacity) samples within one discharge,
/// in recording order. Capacity is non-decreasing along the list; any
/// differential analysis needs at least 2 samples.
struct DischargeTrace {
  std::string cell_id;
  int cycle_index = 1;
  std::vector<TraceSample> samples;

  /// Set by synth::inject_anomaly: inclusive index range touched by the
  /// injected perturbation. Untouched traces leave it empty.
  std::optional<std::pair<std::size_t, std::size_t>> perturbed_range;
};

} // namespace battlab
