#include "battlab/report.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <vector>

#include "battlab/ingest.hpp"
#include "battlab/metrics.hpp"

namespace battlab::report {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(p.string() + ": " + e.what());
  }
  return j;
}

std::vector<fs::path> sorted_files(const fs::path& dir) {
  if (!fs::exists(dir)) throw NotFoundError("no such directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

} // namespace

ReportBundle build_report(const fs::path& out_dir) {
  json cells = json::object();
  json fade = json::object();
  json anomalies = json::object();
  json training;  // null until found
  json metrics_j; // null until found
  json timing = json::object();
  std::string soh_csv = "cell,cycle,soh_pct\n";
  std::string dva_csv = "cell,cycle,v_mid,dq_dv\n";
  bool found_any = false;
  std::optional<double> measured_mae_pct;

  for (const fs::path& path : sorted_files(out_dir)) {
    const std::string name = path.filename().string();
    if (ends_with(name, "_soh.json")) {
      const json j = read_json(path);
      const std::string cell = j.at("cell").get<std::string>();
      json summary = {{"nominal_capacity_mAh", j.at("nominal_capacity_mAh")},
                      {"nominal_is_heuristic", j.value("nominal_is_heuristic", false)},
                      {"overshoot", j.at("overshoot")},
                      {"n_points", j.at("points").size()}};
      const auto& points = j.at("points");
      if (!points.empty()) {
        summary["first"] = points.front();
        summary["last"] = points.back();
      }
      cells[cell]["soh"] = std::move(summary);
      for (const auto& p : points)
        soh_csv += cell + "," + std::to_string(p.at(0).get<int>()) + "," +
                   json(p.at(1)).dump() + "\n";
      found_any = true;
    } else if (ends_with(name, "_rul.json")) {
      const json j = read_json(path);
      cells[j.at("cell").get<std::string>()]["rul"] = {
          {"fit", j.at("fit")},       {"eol_cycle", j.at("eol_cycle")},
          {"rul", j.at("rul")},       {"threshold", j.at("threshold")},
          {"current_cycle", j.at("current_cycle")}, {"nominal", j.at("nominal")}};
      found_any = true;
    } else if (ends_with(name, "_dva.json")) {
      const json j = read_json(path);
      const std::string cell = j.at("cell").get<std::string>();
      fade[cell].push_back({j.at("cycle"), j.at("window_capacities").at("window_mAh")});
      found_any = true;
    } else if (ends_with(name, "_dva.csv")) {
      const auto ref = ingest::parse_trace_filename(
          name.substr(0, name.size() - 8) + "_discharge.csv");
      std::ifstream in(path);
      std::string line;
      std::getline(in, line); // header
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        dva_csv += (ref ? ref->first : std::string("?")) + "," +
                   (ref ? std::to_string(ref->second) : std::string("?")) + "," + line + "\n";
      }
      found_any = true;
    } else if (ends_with(name, "_anomaly.json")) {
      const json j = read_json(path);
      const std::string key =
          j.at("cell").get<std::string>() + "_cycle" + std::to_string(j.at("cycle").get<int>());
      anomalies[key] = {{"n_flagged", j.at("flagged").size()},
                        {"threshold_z", j.at("threshold_z")},
                        {"baseline", j.at("baseline")},
                        {"degenerate_scale", j.at("degenerate_scale")}};
      found_any = true;
    } else if (name == "train_report.json") {
      const json j = read_json(path);
      training = j.at("report");
      timing["training"] = j.at("timing");
      found_any = true;
    } else if (name == "eval.json") {
      const json j = read_json(path);
      metrics_j = j.at("result");
      timing["evaluation"] = j.at("timing");
      if (metrics_j.contains("mae_pct") && metrics_j["mae_pct"].is_number())
        measured_mae_pct = metrics_j["mae_pct"].get<double>();
      found_any = true;
    }
  }
  if (!found_any) throw NotFoundError("no run artifacts found in " + out_dir.string());

  // fade series sorted by cycle within each cell
  for (auto& [cell, series] : fade.items()) {
    std::vector<std::pair<int, json>> rows;
    for (auto& e : series) rows.emplace_back(e.at(0).get<int>(), e);
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    json sorted = json::array();
    for (auto& [_, e] : rows) sorted.push_back(e);
    series = std::move(sorted);
  }

  // The measured row's wall time belongs to the timing key, not the
  // deterministic report subtree; it is zeroed here and preserved under
  // timing.evaluation.inference_seconds.
  std::vector<metrics::ComparisonRow> measured;
  if (measured_mae_pct)
    measured.push_back({"transformer (this run)", *measured_mae_pct, 0.0, false});
  const auto table = metrics::comparison_table(measured, /*include_reference=*/true);

  ReportBundle bundle;
  bundle.j["report"] = {
      {"cells", cells.empty() ? json{{"present", false}} : json{{"present", true}, {"by_cell", cells}}},
      {"fade_series", fade.empty() ? json{{"present", false}} : json{{"present", true}, {"by_cell", fade}}},
      {"anomalies",
       anomalies.empty() ? json{{"present", false}} : json{{"present", true}, {"by_trace", anomalies}}},
      {"training", training.is_null() ? json{{"present", false}}
                                      : json{{"present", true}, {"epochs", training}}},
      {"metrics", metrics_j.is_null() ? json{{"present", false}}
                                      : json{{"present", true}, {"result", metrics_j}}},
      {"comparison", table.j},
  };
  bundle.j["timing"] = timing;
  bundle.soh_curves_csv = std::move(soh_csv);
  bundle.dva_curves_csv = std::move(dva_csv);

  std::ostringstream text; // no paths here: identical runs print identical bytes
  text << "run report\n\n";
  for (const auto& [cell, info] : cells.items()) {
    text << cell << ":";
    if (info.contains("soh")) {
      const auto& s = info["soh"];
      text << " soh points=" << s["n_points"];
      if (s.contains("last"))
        text << " last=" << s["last"][1] << "% @ cycle " << s["last"][0];
    }
    if (info.contains("rul")) {
      const auto& r = info["rul"];
      if (r["eol_cycle"].is_null())
        text << " | eol not reached";
      else
        text << " | eol cycle " << r["eol_cycle"] << " (rul " << r["rul"] << ")";
    }
    text << "\n";
  }
  for (const auto& [cell, series] : fade.items()) {
    text << cell << " window capacity by cycle:";
    for (const auto& e : series) text << " (" << e[0] << ", " << e[1] << ")";
    text << "\n";
  }
  if (!anomalies.empty()) {
    text << "anomaly flags:";
    for (const auto& [key, a] : anomalies.items()) text << " " << key << "=" << a["n_flagged"];
    text << "\n";
  }
  text << (metrics_j.is_null() ? "metrics: absent\n" : "metrics: present\n");
  text << "\n" << table.text;
  bundle.text = text.str();
  return bundle;
}

ReportBundle write_report(const fs::path& out_dir) {
  ReportBundle bundle = build_report(out_dir);
  std::ofstream(out_dir / "report.json") << bundle.j.dump(2) << '\n';
  std::ofstream(out_dir / "report.txt") << bundle.text;
  std::ofstream(out_dir / "soh_curves.csv") << bundle.soh_curves_csv;
  std::ofstream(out_dir / "dva_curves.csv") << bundle.dva_curves_csv;
  return bundle;
}

} // namespace battlab::report
