#pragma once

// Plain comma-separated files exchanged by the command-line tool. Headers
// are checked verbatim; numbers are written in shortest round-trip form so
// a write/read cycle reproduces every double exactly.

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "analysis.hpp"
#include "errors.hpp"
#include "imaging.hpp"
#include "layout.hpp"
#include "synth.hpp"

namespace jju::csv {

inline constexpr std::string_view kLayoutHeader =
    "structure_id,die_x,die_y,x_mm,y_mm,variant,w_b_nm,w_t_nm,a_overlap_um2,junction_count,excluded";
inline constexpr std::string_view kMeasurementHeader =
    "structure_id,die_x,die_y,x_mm,y_mm,variant,w_b_nm,w_t_nm,a_overlap_um2,junction_count,excluded,g_uS";
inline constexpr std::string_view kTsvHeader = "x_mm,y_mm,diameter_um";
inline constexpr std::string_view kSitesHeader = "subarray,x_mm,y_mm,group";
inline constexpr std::string_view kSweepsHeader = "range,w_nm";
inline constexpr std::string_view kTruthHeader = "structure_id,defect";
inline constexpr std::string_view kExtractionHeader = "structure_id,d_mm,w_top_nm,w_bottom_nm,a_overlap_um2";
inline constexpr std::string_view kHeatmapHeader = "variant,row,col,x_mm,y_mm,structure_id,value,mask";

inline std::string num(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw DataError("number formatting failed");
  return std::string(buf, end);
}

inline std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

struct Rows {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

inline Rows read_rows(std::istream& is, std::string_view header, std::string_view what) {
  std::string line;
  if (!std::getline(is, line)) throw DataError(std::string(what) + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header)
    throw DataError(std::string(what) + ": expected header '" + std::string(header) + "', got '" + line + "'");
  const std::size_t ncols = split(header).size();
  Rows out;
  std::size_t n = 1;
  while (std::getline(is, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line);
    if (fields.size() != ncols)
      throw DataError(std::string(what) + ":" + std::to_string(n) + ": expected " +
                      std::to_string(ncols) + " fields, got " + std::to_string(fields.size()));
    out.rows.push_back(std::move(fields));
    out.line_numbers.push_back(n);
  }
  return out;
}

inline double to_double(const std::string& s, std::string_view what, std::size_t line) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw DataError(std::string(what) + ":" + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

inline int to_int(const std::string& s, std::string_view what, std::size_t line) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw DataError(std::string(what) + ":" + std::to_string(line) + ": bad integer '" + s + "'");
  return v;
}

inline bool to_bool(const std::string& s, std::string_view what, std::size_t line) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw DataError(std::string(what) + ":" + std::to_string(line) + ": bad boolean '" + s + "'");
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open '" + path + "'");
  return is;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write '" + path + "'");
  return os;
}

namespace detail {

inline void write_structure_fields(std::ostream& os, const std::string& id, int dx, int dy,
                                   WaferPoint p, const JunctionDesign& d, double area, int jc,
                                   bool excluded) {
  os << id << ',' << dx << ',' << dy << ',' << num(p.x_mm) << ',' << num(p.y_mm) << ','
     << to_string(d.variant) << ',' << num(d.w_bottom_nm) << ',' << num(d.w_top_nm) << ','
     << num(area) << ',' << jc << ',' << (excluded ? "true" : "false");
}

inline JunctionDesign design_from(const std::vector<std::string>& f, std::string_view what, std::size_t n) {
  JunctionDesign d;
  d.variant = parse_variant(f[5]);
  d.w_bottom_nm = to_double(f[6], what, n);
  d.w_top_nm = to_double(f[7], what, n);
  if (!(d.w_bottom_nm > 0.0 && d.w_top_nm > 0.0))
    throw DataError(std::string(what) + ":" + std::to_string(n) + ": widths must be positive");
  if (d.variant == Variant::Dolan) d.overlap_length_nm = to_double(f[8], what, n) * kNm2PerUm2 / d.w_top_nm;
  return d;
}

} // namespace detail

inline void write_layout(std::ostream& os, const WaferLayout& layout) {
  os << kLayoutHeader << '\n';
  for (const auto& s : layout.structures) {
    detail::write_structure_fields(os, s.id, s.die_x, s.die_y, s.position, s.design,
                                   s.a_overlap_designed_um2, s.junction_count, s.excluded);
    os << '\n';
  }
}

/// Layout read back from CSV. Sub-array, cell and group are not part of the
/// file and come back as defaults.
inline WaferLayout read_layout(std::istream& is, std::string_view what = "layout") {
  const auto rows = read_rows(is, kLayoutHeader, what);
  WaferLayout out;
  for (std::size_t i = 0; i < rows.rows.size(); ++i) {
    const auto& f = rows.rows[i];
    const auto n = rows.line_numbers[i];
    TestStructure s;
    s.id = f[0];
    s.die_x = to_int(f[1], what, n);
    s.die_y = to_int(f[2], what, n);
    s.position = {to_double(f[3], what, n), to_double(f[4], what, n)};
    s.design = detail::design_from(f, what, n);
    s.a_overlap_designed_um2 = to_double(f[8], what, n);
    s.junction_count = to_int(f[9], what, n);
    s.excluded = to_bool(f[10], what, n);
    s.subarray = -1;
    out.structures.push_back(std::move(s));
  }
  return out;
}

inline void write_measurements(std::ostream& os, const std::vector<MeasurementRecord>& recs) {
  os << kMeasurementHeader << '\n';
  for (const auto& r : recs) {
    detail::write_structure_fields(os, r.structure_id, r.die_x, r.die_y, r.position, r.design,
                                   r.a_overlap_designed_um2, r.junction_count, r.excluded);
    os << ',' << num(r.g_us) << '\n';
  }
}

inline std::vector<MeasurementRecord> read_measurements(std::istream& is,
                                                        std::string_view what = "measurements") {
  const auto rows = read_rows(is, kMeasurementHeader, what);
  std::vector<MeasurementRecord> out;
  for (std::size_t i = 0; i < rows.rows.size(); ++i) {
    const auto& f = rows.rows[i];
    const auto n = rows.line_numbers[i];
    MeasurementRecord r;
    r.structure_id = f[0];
    r.die_x = to_int(f[1], what, n);
    r.die_y = to_int(f[2], what, n);
    r.position = {to_double(f[3], what, n), to_double(f[4], what, n)};
    r.design = detail::design_from(f, what, n);
    r.a_overlap_designed_um2 = to_double(f[8], what, n);
    r.junction_count = to_int(f[9], what, n);
    r.excluded = to_bool(f[10], what, n);
    r.g_us = to_double(f[11], what, n);
    if (r.g_us < 0.0) throw DataError(std::string(what) + ":" + std::to_string(n) + ": negative conductance");
    out.push_back(std::move(r));
  }
  return out;
}

inline void write_truth(std::ostream& os, const std::vector<MeasurementRecord>& recs) {
  os << kTruthHeader << '\n';
  for (const auto& r : recs) {
    if (!r.truth) throw DataError("record '" + r.structure_id + "' carries no truth flags");
    os << r.structure_id << ',' << to_string(*r.truth) << '\n';
  }
}

inline std::unordered_map<std::string, DefectClass> read_truth(std::istream& is) {
  const auto rows = read_rows(is, kTruthHeader, "truth");
  std::unordered_map<std::string, DefectClass> out;
  for (const auto& f : rows.rows) out[f[0]] = parse_defect_class(f[1]);
  return out;
}

inline void write_tsvs(std::ostream& os, const std::vector<Tsv>& tsvs) {
  os << kTsvHeader << '\n';
  for (const auto& t : tsvs)
    os << num(t.centre.x_mm) << ',' << num(t.centre.y_mm) << ',' << num(t.diameter_um) << '\n';
}

inline std::vector<Tsv> read_tsvs(std::istream& is) {
  const auto rows = read_rows(is, kTsvHeader, "tsv");
  std::vector<Tsv> out;
  for (std::size_t i = 0; i < rows.rows.size(); ++i) {
    const auto& f = rows.rows[i];
    const auto n = rows.line_numbers[i];
    Tsv t{{to_double(f[0], "tsv", n), to_double(f[1], "tsv", n)}, to_double(f[2], "tsv", n)};
    if (!(t.diameter_um > 0.0)) throw DataError("tsv:" + std::to_string(n) + ": diameter must be positive");
    out.push_back(t);
  }
  return out;
}

inline void write_sites(std::ostream& os, const std::vector<SubarraySite>& sites) {
  os << kSitesHeader << '\n';
  for (std::size_t i = 0; i < sites.size(); ++i)
    os << i << ',' << num(sites[i].x_mm) << ',' << num(sites[i].y_mm) << ','
       << to_string(sites[i].group) << '\n';
}

inline std::vector<SubarraySite> read_sites(std::istream& is) {
  const auto rows = read_rows(is, kSitesHeader, "sites");
  std::vector<SubarraySite> out;
  for (std::size_t i = 0; i < rows.rows.size(); ++i) {
    const auto& f = rows.rows[i];
    const auto n = rows.line_numbers[i];
    if (to_int(f[0], "sites", n) != static_cast<int>(i))
      throw DataError("sites:" + std::to_string(n) + ": sub-arrays must be numbered 0.. in order");
    out.push_back({to_double(f[1], "sites", n), to_double(f[2], "sites", n), parse_sweep_group(f[3])});
  }
  return out;
}

inline void write_sweeps(std::ostream& os, const SweepTable& t) {
  os << kSweepsHeader << '\n';
  auto emit = [&](const char* name, const std::vector<double>& v) {
    for (double w : v) os << name << ',' << num(w) << '\n';
  };
  emit("l", t.low);
  emit("m", t.mid);
  emit("h", t.high);
  emit("tsv", t.tsv);
}

inline SweepTable read_sweeps(std::istream& is) {
  const auto rows = read_rows(is, kSweepsHeader, "sweeps");
  SweepTable t;
  for (std::size_t i = 0; i < rows.rows.size(); ++i) {
    const auto& f = rows.rows[i];
    const double w = to_double(f[1], "sweeps", rows.line_numbers[i]);
    if (f[0] == "l") t.low.push_back(w);
    else if (f[0] == "m") t.mid.push_back(w);
    else if (f[0] == "h") t.high.push_back(w);
    else if (f[0] == "tsv") t.tsv.push_back(w);
    else throw DataError("sweeps:" + std::to_string(rows.line_numbers[i]) + ": unknown range '" + f[0] + "'");
  }
  t.validate();
  return t;
}

struct ExtractionRow {
  std::string structure_id;
  std::optional<double> d_mm;
  ExtractionResult result;
};

inline void write_extractions(std::ostream& os, const std::vector<ExtractionRow>& rows) {
  os << kExtractionHeader << '\n';
  for (const auto& r : rows)
    os << r.structure_id << ',' << (r.d_mm ? num(*r.d_mm) : std::string{}) << ','
       << num(r.result.w_top_nm) << ',' << num(r.result.w_bottom_nm) << ','
       << num(r.result.a_overlap_um2) << '\n';
}

inline void write_heatmap(std::ostream& os, Variant v, const analysis::HeatmapGrid& g,
                          bool header = true) {
  if (header) os << kHeatmapHeader << '\n';
  for (std::size_t r = 0; r < g.rows(); ++r)
    for (std::size_t c = 0; c < g.cols(); ++c) {
      const std::size_t i = r * g.cols() + c;
      if (g.ids[i].empty()) continue;
      const auto& cell = g.cells[i];
      os << to_string(v) << ',' << r << ',' << c << ',' << num(g.xs[c]) << ',' << num(g.ys[r]) << ','
         << g.ids[i] << ',' << (cell ? num(*cell) : std::string("0")) << ',' << (cell ? 0 : 1) << '\n';
    }
}

} // namespace jju::csv
