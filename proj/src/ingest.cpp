#include "battlab/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace battlab::ingest {

namespace {

bool contains(std::string_view haystack, std::string_view needle) {
  return haystack.find(needle) != std::string_view::npos;
}

bool is_discharge_alias(std::string_view f) {
  return contains(f, "cap") && (contains(f, "dchg") || contains(f, "discharge"));
}

bool is_charge_alias(std::string_view f) {
  return contains(f, "cap") && (contains(f, "chg") || contains(f, "charge")) &&
         !is_discharge_alias(f);
}

bool is_voltage_alias(std::string_view f) { return contains(f, "voltage") || f == "v"; }

bool is_cycle_alias(std::string_view f) { return contains(f, "cycle"); }

/// Full-string numeric parse; rejects partial matches like "12abc".
bool parse_double(std::string_view s, double& out) {
  // trim ASCII whitespace
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

using RolePredicate = bool (*)(std::string_view);

/// First unclaimed column matching the role. Throws AmbiguityError when the
/// winner's canonical form is shared by another matching column.
std::optional<std::size_t> resolve_role(const std::vector<std::string>& canon,
                                        const std::vector<bool>& claimed,
                                        RolePredicate matches, const char* role_name) {
  std::optional<std::size_t> winner;
  for (std::size_t i = 0; i < canon.size(); ++i) {
    if (claimed[i] || !matches(canon[i])) continue;
    if (!winner) {
      winner = i;
    } else if (canon[*winner] == canon[i]) {
      throw AmbiguityError("columns " + std::to_string(*winner) + " and " +
                           std::to_string(i) + " both canonicalize to '" +
                           canon[*winner] + "' for the " + role_name + " role");
    }
  }
  return winner;
}

ColumnSchema resolve_schema(const std::vector<std::string>& header) {
  if (header.empty()) throw SchemaError("empty header row");
  std::vector<std::string> canon(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) canon[i] = canonical_header(header[i]);

  std::vector<bool> claimed(header.size(), false);
  ColumnSchema schema;
  auto claim = [&](std::optional<std::size_t> idx) {
    if (idx) claimed[*idx] = true;
    return idx;
  };
  schema.charge_capacity_col = claim(resolve_role(canon, claimed, is_charge_alias, "charge capacity"));
  schema.discharge_capacity_col =
      claim(resolve_role(canon, claimed, is_discharge_alias, "discharge capacity"));
  schema.voltage_col = claim(resolve_role(canon, claimed, is_voltage_alias, "voltage"));
  schema.cycle_col = claim(resolve_role(canon, claimed, is_cycle_alias, "cycle"));

  for (std::size_t i = 0; i < header.size(); ++i)
    if (!claimed[i]) schema.extras.emplace_back(header[i], i);
  return schema;
}

std::optional<std::size_t> find_extra(const ColumnSchema& schema, std::string_view needle) {
  for (const auto& [name, idx] : schema.extras)
    if (contains(canonical_header(name), needle)) return idx;
  return std::nullopt;
}

std::size_t max_index(const ColumnSchema& schema) {
  std::size_t m = 0;
  auto update = [&](std::optional<std::size_t> i) {
    if (i) m = std::max(m, *i);
  };
  update(schema.charge_capacity_col);
  update(schema.discharge_capacity_col);
  update(schema.voltage_col);
  update(schema.cycle_col);
  return m;
}

bool is_comment_or_blank(const std::string& line) {
  for (char c : line) {
    if (c == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true; // all whitespace
}

double channel_value(const CycleRecord& r, std::string_view name) {
  if (name == "cap_chg") return r.cap_chg_mAh;
  if (name == "cap_dchg") return r.cap_dchg_mAh;
  if (name == "temperature") return r.temperature_C.value_or(0.0);
  return static_cast<double>(r.cycle_index); // "cycle"
}

void check_sorted(const std::vector<CycleRecord>& records) {
  for (std::size_t i = 1; i < records.size(); ++i)
    if (records[i].cycle_index <= records[i - 1].cycle_index)
      throw ArgumentError("records must be sorted by strictly increasing cycle index");
}

std::vector<FeatureChannel> make_channels(const std::vector<const CycleRecord*>& all) {
  bool all_have_temp = !all.empty();
  for (const CycleRecord* r : all)
    if (!r->temperature_C) all_have_temp = false;

  std::vector<FeatureChannel> channels;
  channels.push_back({"cap_chg", 0, 0});
  channels.push_back({"cap_dchg", 0, 0});
  if (all_have_temp) channels.push_back({"temperature", 0, 0});
  channels.push_back({"cycle", 0, 0});

  for (auto& ch : channels) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const CycleRecord* r : all) {
      const double v = channel_value(*r, ch.name);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    ch.min = lo;
    ch.max = hi;
  }
  return channels;
}

/// Emit rows for one cell into an existing matrix (stats already set).
void append_cell_rows(FeatureMatrix& fm, const std::vector<CycleRecord>& records) {
  const int window = fm.window;
  const std::size_t n_rows = records.size() - static_cast<std::size_t>(window);
  const std::size_t first_row = fm.rows.size();
  for (std::size_t i = 0; i < n_rows; ++i) {
    std::vector<double> row;
    row.reserve(fm.feature_width());
    for (int j = 0; j < window; ++j) {
      const CycleRecord& r = records[i + static_cast<std::size_t>(j)];
      for (std::size_t c = 0; c < fm.channels.size(); ++c)
        row.push_back(fm.normalize(c, channel_value(r, fm.channels[c].name)));
    }
    const CycleRecord& label_rec = records[i + static_cast<std::size_t>(window)];
    fm.rows.push_back(std::move(row));
    fm.labels.push_back(label_rec.cap_chg_mAh);
    fm.row_refs.emplace_back(label_rec.cell_id, label_rec.cycle_index);
  }
  const std::size_t n_train = static_cast<std::size_t>(0.8 * static_cast<double>(n_rows));
  for (std::size_t i = 0; i < n_rows; ++i) {
    if (i < n_train)
      fm.train_indices.push_back(first_row + i);
    else
      fm.test_indices.push_back(first_row + i);
  }
}

} // namespace

std::string canonical_header(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    const unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) out.push_back(static_cast<char>(std::tolower(u)));
  }
  return out;
}

ColumnSchema detect_schema(const std::vector<std::string>& header) {
  ColumnSchema schema = resolve_schema(header);
  if (!schema.charge_capacity_col)
    throw SchemaError("no charge-capacity column found in header");
  if (!schema.discharge_capacity_col)
    throw SchemaError("no discharge-capacity column found in header");
  return schema;
}

ColumnSchema detect_trace_schema(const std::vector<std::string>& header) {
  ColumnSchema schema = resolve_schema(header);
  if (!schema.voltage_col) throw SchemaError("no voltage column found in trace header");
  if (!schema.charge_capacity_col && !schema.discharge_capacity_col)
    throw SchemaError("no capacity column found in trace header");
  return schema;
}

std::vector<std::string> split_delimited(const std::string& line, char delimiter) {
  std::string work = line;
  if (!work.empty() && work.back() == '\r') work.pop_back();
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = work.find(delimiter, start);
    if (pos == std::string::npos) {
      cells.push_back(work.substr(start));
      break;
    }
    cells.push_back(work.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

CycleLoadResult load_cycles(std::istream& in, const ColumnSchema& schema,
                            const std::string& cell_id, char delimiter) {
  if (!schema.charge_capacity_col || !schema.discharge_capacity_col)
    throw SchemaError("cycle loading needs both capacity columns resolved");

  const std::size_t need = max_index(schema) + 1;
  const auto temp_col = find_extra(schema, "temp");
  auto energy_col = find_extra(schema, "energy");
  if (!energy_col) energy_col = find_extra(schema, "mwh");

  CycleLoadResult result;
  std::size_t total_rows = 0;
  int last_cycle = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (is_comment_or_blank(line)) continue;
    ++total_rows;
    const auto cells = split_delimited(line, delimiter);
    if (cells.size() < need) {
      ++result.skipped_rows;
      continue;
    }

    CycleRecord rec;
    rec.cell_id = cell_id;
    double chg, dchg;
    if (!parse_double(cells[*schema.charge_capacity_col], chg) || !std::isfinite(chg) ||
        chg < 0.0 ||
        !parse_double(cells[*schema.discharge_capacity_col], dchg) || !std::isfinite(dchg) ||
        dchg < 0.0) {
      ++result.skipped_rows;
      continue;
    }
    rec.cap_chg_mAh = chg;
    rec.cap_dchg_mAh = dchg;

    if (schema.cycle_col) {
      double cyc;
      if (!parse_double(cells[*schema.cycle_col], cyc) || !std::isfinite(cyc) || cyc < 1.0) {
        ++result.skipped_rows;
        continue;
      }
      rec.cycle_index = static_cast<int>(cyc);
    } else {
      rec.cycle_index = last_cycle + 1;
    }
    if (rec.cycle_index <= last_cycle) { // keep the series strictly increasing
      ++result.skipped_rows;
      continue;
    }

    double v;
    if (temp_col && *temp_col < cells.size() && parse_double(cells[*temp_col], v) &&
        std::isfinite(v))
      rec.temperature_C = v;
    if (energy_col && *energy_col < cells.size() && parse_double(cells[*energy_col], v) &&
        std::isfinite(v) && v >= 0.0)
      rec.energy_mWh = v;

    last_cycle = rec.cycle_index;
    result.records.push_back(std::move(rec));
  }
  if (in.bad()) throw IoError("stream failure while reading cycle log");
  if (total_rows > 0 && 2 * result.skipped_rows > total_rows)
    throw ParseError("skipped " + std::to_string(result.skipped_rows) + " of " +
                     std::to_string(total_rows) + " rows; schema likely wrong");
  return result;
}

TraceLoadResult load_trace(std::istream& in, const ColumnSchema& schema,
                           const std::string& cell_id, int cycle_index, char delimiter) {
  if (!schema.voltage_col)
    throw SchemaError("trace loading needs a voltage column resolved");
  const std::optional<std::size_t> cap_col =
      schema.discharge_capacity_col ? schema.discharge_capacity_col : schema.charge_capacity_col;
  if (!cap_col) throw SchemaError("trace loading needs a capacity column resolved");
  const std::size_t need = std::max(*schema.voltage_col, *cap_col) + 1;

  TraceLoadResult result;
  result.trace.cell_id = cell_id;
  result.trace.cycle_index = cycle_index;
  double last_cap = -std::numeric_limits<double>::infinity();
  std::string line;
  while (std::getline(in, line)) {
    if (is_comment_or_blank(line)) continue;
    const auto cells = split_delimited(line, delimiter);
    double v, q;
    if (cells.size() < need || !parse_double(cells[*schema.voltage_col], v) ||
        !std::isfinite(v) || !parse_double(cells[*cap_col], q) || !std::isfinite(q) ||
        q < 0.0 || q < last_cap) {
      ++result.dropped_samples;
      continue;
    }
    last_cap = q;
    result.trace.samples.push_back({v, q});
  }
  if (in.bad()) throw IoError("stream failure while reading trace");
  if (result.trace.samples.size() < 2)
    throw ParseError("trace has fewer than 2 valid samples");
  return result;
}

double FeatureMatrix::normalize(std::size_t channel, double x) const {
  const FeatureChannel& ch = channels.at(channel);
  const double range = ch.max - ch.min;
  if (range == 0.0) return 0.0; // degenerate range maps to 0
  return (x - ch.min) / range;
}

double FeatureMatrix::denormalize(std::size_t channel, double x_norm) const {
  const FeatureChannel& ch = channels.at(channel);
  return ch.min + x_norm * (ch.max - ch.min);
}

FeatureMatrix build_features(const std::vector<CycleRecord>& records, int window) {
  return build_features(std::vector<std::vector<CycleRecord>>{records}, window);
}

FeatureMatrix build_features(const std::vector<std::vector<CycleRecord>>& cells, int window) {
  if (window < 1) throw ArgumentError("window must be >= 1");
  if (cells.empty()) throw InsufficientDataError("no cells given");
  std::vector<const CycleRecord*> all;
  for (const auto& records : cells) {
    if (records.size() < static_cast<std::size_t>(window) + 1)
      throw InsufficientDataError("need at least window+1 = " + std::to_string(window + 1) +
                                  " records, got " + std::to_string(records.size()));
    check_sorted(records);
    for (const auto& r : records) all.push_back(&r);
  }

  FeatureMatrix fm;
  fm.window = window;
  fm.channels = make_channels(all);
  for (const auto& records : cells) append_cell_rows(fm, records);
  return fm;
}

FeatureMatrix build_features_using(const std::vector<CycleRecord>& records, int window,
                                   const std::vector<FeatureChannel>& channels) {
  if (window < 1) throw ArgumentError("window must be >= 1");
  if (records.size() < static_cast<std::size_t>(window) + 1)
    throw InsufficientDataError("need at least window+1 records");
  check_sorted(records);
  const bool wants_temp =
      std::any_of(channels.begin(), channels.end(),
                  [](const FeatureChannel& c) { return c.name == "temperature"; });
  if (wants_temp)
    for (const auto& r : records)
      if (!r.temperature_C)
        throw ArgumentError("stored normalization expects a temperature per record");

  FeatureMatrix fm;
  fm.window = window;
  fm.channels = channels;
  append_cell_rows(fm, records);
  return fm;
}

void write_cycles(std::ostream& out, const std::vector<CycleRecord>& records) {
  out << "Cycle,Cap_Chg(mAh),Cap_DChg(mAh),Energy(mWh),Temperature(C)\n";
  for (const auto& r : records) {
    out << r.cycle_index << ',' << format_double(r.cap_chg_mAh) << ','
        << format_double(r.cap_dchg_mAh) << ',';
    if (r.energy_mWh) out << format_double(*r.energy_mWh);
    out << ',';
    if (r.temperature_C) out << format_double(*r.temperature_C);
    out << '\n';
  }
}

void write_trace(std::ostream& out, const DischargeTrace& trace) {
  out << "Voltage(V),Cap_DChg(mAh)\n";
  for (const auto& s : trace.samples)
    out << format_double(s.voltage_V) << ',' << format_double(s.capacity_mAh) << '\n';
}

namespace {

char sniff_delimiter(const std::string& header_line) {
  return header_line.find('\t') != std::string::npos ? '\t' : ',';
}

std::pair<ColumnSchema, char> open_and_detect(std::ifstream& in, const std::string& path,
                                              bool trace) {
  if (!in) throw IoError("cannot open " + path);
  std::string header_line;
  // skip leading comment lines before the header
  do {
    if (!std::getline(in, header_line)) throw ParseError(path + ": missing header row");
  } while (is_comment_or_blank(header_line));
  const char delim = sniff_delimiter(header_line);
  const auto header = split_delimited(header_line, delim);
  return {trace ? detect_trace_schema(header) : detect_schema(header), delim};
}

} // namespace

CycleLoadResult load_cycles_file(const std::string& path, const std::string& cell_id) {
  std::ifstream in(path);
  const auto [schema, delim] = open_and_detect(in, path, /*trace=*/false);
  return load_cycles(in, schema, cell_id, delim);
}

TraceLoadResult load_trace_file(const std::string& path, const std::string& cell_id,
                                int cycle_index) {
  std::ifstream in(path);
  const auto [schema, delim] = open_and_detect(in, path, /*trace=*/true);
  return load_trace(in, schema, cell_id, cycle_index, delim);
}

std::optional<std::pair<std::string, int>> parse_trace_filename(std::string_view filename) {
  constexpr std::string_view suffix = "_discharge.csv";
  if (filename.size() <= suffix.size() ||
      filename.substr(filename.size() - suffix.size()) != suffix)
    return std::nullopt;
  std::string_view stem = filename.substr(0, filename.size() - suffix.size());
  const std::size_t pos = stem.rfind("_cycle");
  if (pos == std::string_view::npos || pos == 0) return std::nullopt;
  const std::string_view digits = stem.substr(pos + 6);
  int cycle = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), cycle);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || cycle < 1)
    return std::nullopt;
  return std::make_pair(std::string(stem.substr(0, pos)), cycle);
}

} // namespace battlab::ingest
