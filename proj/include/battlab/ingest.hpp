#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "battlab/errors.hpp"
#include "battlab/types.hpp"

namespace battlab::ingest {

/// Column roles resolved from a header row. Indices are 0-based positions in
/// the header; all resolved indices are distinct. Cycle logs need both
/// capacity roles, discharge traces need voltage plus one capacity role.
struct ColumnSchema {
  std::optional<std::size_t> charge_capacity_col;
  std::optional<std::size_t> discharge_capacity_col;
  std::optional<std::size_t> voltage_col;
  std::optional<std::size_t> cycle_col;
  /// Columns not claimed by any role, as (original header name, index).
  /// Metadata such as temperature or current lands here untyped.
  std::vector<std::pair<std::string, std::size_t>> extras;
};

/// Lowercase copy of `s` with everything but [a-z0-9] removed.
/// "Cap_Chg(mAh)" -> "capchgmah". This is the form the alias rules match on.
std::string canonical_header(std::string_view s);

/// Resolve a cycle-log schema from a header row.
///
/// Alias rules, applied to the canonical form, first match wins:
///   discharge capacity: contains "cap" and ("dchg" or "discharge")
///   charge capacity:    contains "cap" and ("chg" or "charge"), and is not
///                       a discharge match ("dchg"/"discharge" are the more
///                       specific aliases and take precedence)
///   voltage:            contains "voltage", or is exactly "v"
///   cycle:              contains "cycle"
/// Roles are claimed in the order charge, discharge, voltage, cycle; a column
/// already claimed by an earlier role is skipped.
///
/// Throws SchemaError when either capacity role is unresolved, and
/// AmbiguityError when the winning column of a role shares its canonical form
/// with another matching column (two spellings that collapse to the same
/// form cannot be ordered meaningfully).
ColumnSchema detect_schema(const std::vector<std::string>& header);

/// Same alias rules, but with trace-file requirements: voltage plus at least
/// one capacity column must resolve.
ColumnSchema detect_trace_schema(const std::vector<std::string>& header);

struct CycleLoadResult {
  std::vector<CycleRecord> records;
  std::size_t skipped_rows = 0;
};

/// Read cycle records from delimited text (header already consumed).
/// Lines starting with '#' and blank lines are ignored. A data row is skipped
/// (and counted) when a mandatory field is missing, non-numeric, non-finite
/// or negative, or when its cycle index does not extend the strictly
/// increasing series. Without a cycle column, indices are assigned 1,2,...
/// in row order.
///
/// Throws ParseError when more than half of the data rows were skipped
/// (almost always a wrong schema), and IoError when the stream itself fails.
CycleLoadResult load_cycles(std::istream& in, const ColumnSchema& schema,
                            const std::string& cell_id, char delimiter = ',');

struct TraceLoadResult {
  DischargeTrace trace;
  std::size_t dropped_samples = 0;
};

/// Read a discharge trace (header already consumed). Uses the discharge
/// capacity column when resolved, otherwise the charge capacity column.
/// Samples that fail to parse or that would make cumulative capacity decrease
/// are dropped and counted. Throws ParseError when fewer than 2 valid samples
/// remain.
TraceLoadResult load_trace(std::istream& in, const ColumnSchema& schema,
                           const std::string& cell_id, int cycle_index,
                           char delimiter = ',');

/// Per-cycle feature channel with the min/max used for normalization.
struct FeatureChannel {
  std::string name;
  double min = 0.0;
  double max = 0.0;
};

/// Fixed-width feature rows with raw capacity labels (mAh) and the
/// normalization stats needed to invert or re-apply the transform.
///
/// Row i concatenates the normalized channel values of `window` consecutive
/// cycles; its label is the raw charge capacity of the following cycle.
/// Channels are, in order: cap_chg, cap_dchg, temperature (only when every
/// record carries one), cycle index; each is min-max normalized over all
/// records that went into the matrix (degenerate range maps to 0).
struct FeatureMatrix {
  std::vector<std::vector<double>> rows; // width = window * channels.size()
  std::vector<double> labels;            // raw cap_chg, mAh
  std::vector<FeatureChannel> channels;  // per-cycle channels, with stats
  int window = 1;
  std::vector<std::size_t> train_indices; // chronological first ~80%
  std::vector<std::size_t> test_indices;  // remaining rows
  /// (cell_id, cycle index of the label cycle) per row, for reporting.
  std::vector<std::pair<std::string, int>> row_refs;

  std::size_t feature_width() const { return channels.size() * static_cast<std::size_t>(window); }

  double normalize(std::size_t channel, double x) const;
  double denormalize(std::size_t channel, double x_norm) const;

  /// Labels share the cap_chg channel's stats (channel 0).
  double normalize_label(double mAh) const { return normalize(0, mAh); }
  double denormalize_label(double x_norm) const { return denormalize(0, x_norm); }
};

/// Build windowed features from one cell's records (sorted by cycle index).
/// Produces records.size() - window rows and a chronological 80/20 split
/// (train size floored). Throws InsufficientDataError with fewer than
/// window + 1 records.
FeatureMatrix build_features(const std::vector<CycleRecord>& records, int window);

/// Multi-cell variant: channel stats are computed over all cells, windows
/// never straddle cells, and each cell contributes its own chronological
/// 80/20 split to the combined index lists.
FeatureMatrix build_features(const std::vector<std::vector<CycleRecord>>& cells,
                             int window);

/// Re-apply a previously computed normalization (e.g. from a training run) to
/// fresh records. Values outside the stored ranges map outside [0, 1].
FeatureMatrix build_features_using(const std::vector<CycleRecord>& records,
                                   int window,
                                   const std::vector<FeatureChannel>& channels);

/// Canonical CSV writers; load_cycles/load_trace read these back unchanged.
void write_cycles(std::ostream& out, const std::vector<CycleRecord>& records);
void write_trace(std::ostream& out, const DischargeTrace& trace);

/// File-level helpers: sniff the delimiter (tab if the header contains one,
/// comma otherwise), detect the schema and load.
CycleLoadResult load_cycles_file(const std::string& path, const std::string& cell_id);
TraceLoadResult load_trace_file(const std::string& path, const std::string& cell_id,
                                int cycle_index);

/// Parse the `<cell>_cycle<N>_discharge.csv` naming convention used by the
/// CLI globber. Returns nullopt when the name does not follow it.
std::optional<std::pair<std::string, int>> parse_trace_filename(std::string_view filename);

/// Split one delimited line; trailing '\r' is stripped first.
std::vector<std::string> split_delimited(const std::string& line, char delimiter);

} // namespace battlab::ingest
