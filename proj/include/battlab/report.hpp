#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "battlab/errors.hpp"

namespace battlab::report {

/// Aggregated view over the artifacts earlier subcommands left in a run
/// directory: SoH summaries, RUL estimates, DVA window trends, anomaly
/// counts, training losses, evaluation metrics and the comparison table.
///
/// Everything timing-related is quarantined under the "timing" key of the
/// JSON document; the "report" subtree is byte-deterministic for identical
/// seeded runs. Sections whose stage never ran are marked absent rather than
/// dropped.
struct ReportBundle {
  nlohmann::json j; // {"report": {...}, "timing": {...}}
  std::string text;
  std::string soh_curves_csv; // cell,cycle,soh_pct
  std::string dva_curves_csv; // cell,cycle,v_mid,dq_dv
};

/// Scan out_dir and build the bundle. Throws NotFoundError when no known
/// artifact is present.
ReportBundle build_report(const std::filesystem::path& out_dir);

/// build_report plus writing report.json, report.txt and the plot CSVs into
/// out_dir.
ReportBundle write_report(const std::filesystem::path& out_dir);

} // namespace battlab::report
