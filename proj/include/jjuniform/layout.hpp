#pragma once

// Wafer layouts of junction test structures: the 17-site die layouts (planar,
// and with through-silicon vias) and the 35x35 uniform arrays.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "shadow_model.hpp"

namespace jju {

enum class LayoutKind {
  Planar17Q,
  Tsv17QDolan,
  Tsv17QManhattan,
  Planar35x35NbTiN,
  Planar35x35TiN,
  Planar35x35Al,
};

inline std::string_view to_string(LayoutKind k) {
  switch (k) {
  case LayoutKind::Planar17Q: return "planar17q";
  case LayoutKind::Tsv17QDolan: return "tsv17q-dolan";
  case LayoutKind::Tsv17QManhattan: return "tsv17q-manhattan";
  case LayoutKind::Planar35x35NbTiN: return "planar35x35-nbtin";
  case LayoutKind::Planar35x35TiN: return "planar35x35-tin";
  case LayoutKind::Planar35x35Al: return "planar35x35-al";
  }
  return "?";
}

inline LayoutKind parse_layout_kind(std::string_view s) {
  for (auto k : {LayoutKind::Planar17Q, LayoutKind::Tsv17QDolan, LayoutKind::Tsv17QManhattan,
                 LayoutKind::Planar35x35NbTiN, LayoutKind::Planar35x35TiN,
                 LayoutKind::Planar35x35Al})
    if (to_string(k) == s) return k;
  throw DataError("unknown layout kind '" + std::string(s) + "'");
}

enum class WaferShape { Round100mm, Square70mm };

inline bool within_wafer(WaferPoint p, WaferShape shape) {
  if (shape == WaferShape::Round100mm) return p.radius_mm() <= 50.0;
  return std::abs(p.x_mm) <= 35.0 && std::abs(p.y_mm) <= 35.0;
}

/// Sweep range of a sub-array: low, mid, high, or a single shared design.
enum class SweepGroup { Low, Mid, High, Uniform };

inline std::string_view to_string(SweepGroup g) {
  switch (g) {
  case SweepGroup::Low: return "l";
  case SweepGroup::Mid: return "m";
  case SweepGroup::High: return "h";
  case SweepGroup::Uniform: return "uniform";
  }
  return "?";
}

inline SweepGroup parse_sweep_group(std::string_view s) {
  if (s == "l") return SweepGroup::Low;
  if (s == "m") return SweepGroup::Mid;
  if (s == "h") return SweepGroup::High;
  if (s == "uniform") return SweepGroup::Uniform;
  throw DataError("unknown sweep group '" + std::string(s) + "'");
}

struct TestStructure {
  std::string id;
  int die_x = 0;
  int die_y = 0;
  int subarray = 0;
  int cell_row = 0;
  int cell_col = 0;
  WaferPoint position;
  JunctionDesign design;
  double a_overlap_designed_um2 = 0.0;
  SweepGroup group = SweepGroup::Uniform;
  bool excluded = false;
  int junction_count = 2;
  std::string exclusion_reason;
};

struct WaferLayout {
  LayoutKind kind = LayoutKind::Planar35x35NbTiN;
  std::vector<TestStructure> structures;
  double die_pitch_mm = 13.0;
  WaferShape shape = WaferShape::Round100mm;

  std::size_t viable_count() const {
    return static_cast<std::size_t>(std::count_if(
        structures.begin(), structures.end(), [](const auto& s) { return !s.excluded; }));
  }
};

/// Centre of one sub-array relative to its die centre.
struct SubarraySite {
  double x_mm = 0.0;
  double y_mm = 0.0;
  SweepGroup group = SweepGroup::Mid;
};

struct Tsv {
  WaferPoint centre;
  double diameter_um = 0.0;
};

/// Widths of the variable electrode, one value per cell in row-major cell
/// order. Manhattan sweeps W_b at fixed W_t; Dolan sweeps W_t at W_b = 3 W_t.
struct SweepTable {
  std::vector<double> low;
  std::vector<double> mid;
  std::vector<double> high;
  std::vector<double> tsv;

  const std::vector<double>& range(SweepGroup g) const {
    switch (g) {
    case SweepGroup::Low: return low;
    case SweepGroup::Mid: return mid;
    case SweepGroup::High: return high;
    case SweepGroup::Uniform: return tsv;
    }
    return tsv;
  }

  static SweepTable reference() {
    SweepTable t;
    for (int i = 0; i < 16; ++i) {
      t.low.push_back(100.0 + 5.0 * i);
      t.mid.push_back(180.0 + 5.0 * i);
      t.high.push_back(260.0 + 5.0 * i);
    }
    for (int i = 0; i < 25; ++i) t.tsv.push_back(100.0 + 10.0 * i);
    return t;
  }

  void validate() const {
    auto check = [](const std::vector<double>& v, std::size_t n, const char* name) {
      if (v.size() != n)
        throw DataError(std::string("sweep '") + name + "' must have " + std::to_string(n) +
                        " widths, got " + std::to_string(v.size()));
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] > 0.0)) throw DataError(std::string("sweep '") + name + "' has a non-positive width");
        if (i > 0 && !(v[i] > v[i - 1]))
          throw DataError(std::string("sweep '") + name + "' is not strictly increasing");
      }
    };
    check(low, 16, "l");
    check(mid, 16, "m");
    check(high, 16, "h");
    check(tsv, 25, "tsv");
  }
};

/// Placement constants of test structures inside a sub-array.
struct CellGeometry {
  double pitch_4x4_mm = 0.30;
  double pitch_5x5_mm = 0.25;
  double footprint_um = 150.0; // square bounding box used for via exclusion
  double manhattan_fixed_top_nm = 160.0;
  double dolan_bottom_ratio = 3.0;
  double uniform_width_nm = 200.0;
  double array_pitch_mm = 2.0; // 35x35 arrays
};

namespace layout {

inline constexpr int kSitesPerDie = 17;

/// Reference 17-site arrangement: rows of 3-4-3-4-3 sites. The 3-site rows
/// host data-qubit positions (low/high groups), the 4-site rows ancilla
/// positions (mid group).
inline std::vector<SubarraySite> reference_sites() {
  using G = SweepGroup;
  const std::array<double, 5> ys{4.0, 2.0, 0.0, -2.0, -4.0};
  const std::array<double, 3> xs3{-3.6, 0.0, 3.6};
  const std::array<double, 4> xs4{-5.4, -1.8, 1.8, 5.4};
  const std::array<std::array<G, 3>, 3> data_groups{{
      {G::Low, G::High, G::Low},
      {G::High, G::Low, G::High},
      {G::Low, G::High, G::Low},
  }};
  std::vector<SubarraySite> sites;
  for (std::size_t r = 0; r < ys.size(); ++r) {
    if (r % 2 == 0) {
      for (std::size_t c = 0; c < xs3.size(); ++c)
        sites.push_back({xs3[c], ys[r], data_groups[r / 2][c]});
    } else {
      for (double x : xs4) sites.push_back({x, ys[r], G::Mid});
    }
  }
  return sites;
}

inline std::vector<WaferPoint> die_centres_17q(bool include_lower_array) {
  std::vector<WaferPoint> out;
  const int rows = include_lower_array ? 4 : 2;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < 4; ++c) out.push_back({(c - 1.5) * 13.0, (1.5 - r) * 13.0});
  return out;
}

/// Via pattern of one die, relative to the die centre. Sub-arrays identical
/// across dies see the same vias, 47 structures lost per die.
inline std::vector<Tsv> reference_die_tsvs() {
  const auto sites = reference_sites();
  const std::set<int> large_centre{0, 4, 8, 12, 16};
  const std::set<int> large_gap{2, 14};
  std::vector<Tsv> out;
  for (int s = 0; s < static_cast<int>(sites.size()); ++s) {
    const auto& site = sites[s];
    if (large_centre.contains(s))
      out.push_back({{site.x_mm, site.y_mm}, 400.0});
    else if (large_gap.contains(s))
      out.push_back({{site.x_mm + 0.125, site.y_mm}, 400.0});
    else
      out.push_back({{site.x_mm, site.y_mm}, 160.0});
  }
  // Vias between sub-arrays; these touch no structure.
  for (auto [x, y] : std::array<std::pair<double, double>, 8>{
           {{-6.0, 6.0}, {6.0, 6.0}, {-6.0, -6.0}, {6.0, -6.0},
            {0.0, 5.6}, {0.0, -5.6}, {-1.8, 0.0}, {1.8, 0.0}}})
    out.push_back({{x, y}, 400.0});
  return out;
}

/// Via pattern replicated over the 2x4 die array of a TSV wafer.
inline std::vector<Tsv> reference_tsvs() {
  std::vector<Tsv> out;
  for (auto die : die_centres_17q(false))
    for (auto t : reference_die_tsvs())
      out.push_back({{die.x_mm + t.centre.x_mm, die.y_mm + t.centre.y_mm}, t.diameter_um});
  return out;
}

/// Omitted rows of the Al 35x35 wafer (two rows skipped during acquisition).
inline std::vector<int> reference_al_omitted_rows() { return {8, 9}; }

namespace detail {

inline std::string format_id(const char* fmt, auto... args) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

inline bool box_hits_circle(WaferPoint box_centre, double half_mm, const Tsv& via) {
  const double dx = std::max(std::abs(via.centre.x_mm - box_centre.x_mm) - half_mm, 0.0);
  const double dy = std::max(std::abs(via.centre.y_mm - box_centre.y_mm) - half_mm, 0.0);
  const double r = via.diameter_um / 2000.0;
  return dx * dx + dy * dy < r * r;
}

inline JunctionDesign design_for(Variant v, double variable_width, const CellGeometry& cells) {
  JunctionDesign d;
  d.variant = v;
  if (v == Variant::Dolan) {
    d.w_top_nm = variable_width;
    d.w_bottom_nm = cells.dolan_bottom_ratio * variable_width;
  } else {
    d.w_bottom_nm = variable_width;
    d.w_top_nm = cells.manhattan_fixed_top_nm;
  }
  return d;
}

inline void check_sites(const std::vector<SubarraySite>& sites) {
  if (sites.size() != kSitesPerDie)
    throw DataError("die layout needs " + std::to_string(kSitesPerDie) + " sub-array sites, got " +
                    std::to_string(sites.size()));
}

// One die of `n x n` cells per site; `variable` picks the width of cell k.
template <class WidthOf>
void emit_die(WaferLayout& out, Variant variant, int die_x, int die_y, WaferPoint die_centre,
              const std::vector<SubarraySite>& sites, int n, double pitch,
              const CellGeometry& cells, WidthOf&& variable) {
  const char tag = variant == Variant::Dolan ? 'D' : 'M';
  const double mid = (n - 1) / 2.0;
  for (int s = 0; s < static_cast<int>(sites.size()); ++s) {
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        TestStructure t;
        t.id = format_id("%c%d%d-s%02d-c%d%d", tag, die_x, die_y, s, r, c);
        t.die_x = die_x;
        t.die_y = die_y;
        t.subarray = s;
        t.cell_row = r;
        t.cell_col = c;
        t.position = {die_centre.x_mm + sites[s].x_mm + (c - mid) * pitch,
                      die_centre.y_mm + sites[s].y_mm + (mid - r) * pitch};
        t.group = n == 4 ? sites[s].group : SweepGroup::Uniform;
        t.design = design_for(variant, variable(sites[s], r * n + c), cells);
        t.a_overlap_designed_um2 = t.design.designed_area_um2();
        out.structures.push_back(std::move(t));
      }
    }
  }
}

} // namespace detail

/// Planar 17Q wafer: 4x4 die grid, upper two rows Dolan, lower two Manhattan,
/// a 4x4 sub-array at each of the 17 sites.
inline WaferLayout build_planar_17q(const SweepTable& sweeps = SweepTable::reference(),
                                    const std::vector<SubarraySite>& sites = reference_sites(),
                                    const CellGeometry& cells = {}) {
  sweeps.validate();
  detail::check_sites(sites);
  WaferLayout out;
  out.kind = LayoutKind::Planar17Q;
  out.shape = WaferShape::Round100mm;
  out.die_pitch_mm = 13.0;
  const auto centres = die_centres_17q(true);
  for (int i = 0; i < static_cast<int>(centres.size()); ++i) {
    const int die_x = i % 4, die_y = i / 4;
    const Variant v = die_y < 2 ? Variant::Dolan : Variant::Manhattan;
    detail::emit_die(out, v, die_x, die_y, centres[i], sites, 4, cells.pitch_4x4_mm, cells,
                     [&](const SubarraySite& site, int k) { return sweeps.range(site.group)[k]; });
  }
  return out;
}

/// TSV 17Q wafer of a single variant: 2x4 dies on the upper half of the
/// 70 mm square, identical 5x5 sweeps at every site. Structures whose
/// footprint intersects a via are kept in the layout but marked excluded.
inline WaferLayout build_tsv_17q(Variant variant, const std::vector<Tsv>& tsvs,
                                 const SweepTable& sweeps = SweepTable::reference(),
                                 const std::vector<SubarraySite>& sites = reference_sites(),
                                 const CellGeometry& cells = {}) {
  sweeps.validate();
  detail::check_sites(sites);
  WaferLayout out;
  out.kind = variant == Variant::Dolan ? LayoutKind::Tsv17QDolan : LayoutKind::Tsv17QManhattan;
  out.shape = WaferShape::Square70mm;
  out.die_pitch_mm = 13.0;
  const auto centres = die_centres_17q(false);
  for (int i = 0; i < static_cast<int>(centres.size()); ++i)
    detail::emit_die(out, variant, i % 4, i / 4, centres[i], sites, 5, cells.pitch_5x5_mm, cells,
                     [&](const SubarraySite&, int k) { return sweeps.tsv[k]; });
  const double half = cells.footprint_um / 2000.0;
  for (auto& s : out.structures) {
    for (const auto& via : tsvs) {
      if (detail::box_hits_circle(s.position, half, via)) {
        s.excluded = true;
        s.exclusion_reason = "overlaps via";
        break;
      }
    }
  }
  return out;
}

/// 35x35 array of identical W_b = W_t junction pairs (single junctions for
/// Al pads). `omitted_rows` marks whole rows as not measured.
inline WaferLayout build_35x35(LayoutKind kind, const std::vector<int>& omitted_rows = {},
                               const CellGeometry& cells = {}) {
  if (kind != LayoutKind::Planar35x35NbTiN && kind != LayoutKind::Planar35x35TiN &&
      kind != LayoutKind::Planar35x35Al)
    throw DataError("build_35x35 needs a 35x35 layout kind");
  for (int r : omitted_rows)
    if (r < 0 || r >= 35) throw DataError("omitted row out of range: " + std::to_string(r));
  const char tag = kind == LayoutKind::Planar35x35Al ? 'A'
                   : kind == LayoutKind::Planar35x35TiN ? 'T'
                                                        : 'N';
  WaferLayout out;
  out.kind = kind;
  out.shape = WaferShape::Round100mm;
  out.die_pitch_mm = 0.0;
  const std::set<int> omit(omitted_rows.begin(), omitted_rows.end());
  out.structures.reserve(35 * 35);
  for (int r = 0; r < 35; ++r) {
    for (int c = 0; c < 35; ++c) {
      TestStructure t;
      t.id = detail::format_id("%c-r%02d-c%02d", tag, r, c);
      t.cell_row = r;
      t.cell_col = c;
      t.position = {(c - 17) * cells.array_pitch_mm, (17 - r) * cells.array_pitch_mm};
      t.design = {Variant::Manhattan, cells.uniform_width_nm, cells.uniform_width_nm};
      t.a_overlap_designed_um2 = t.design.designed_area_um2();
      t.group = SweepGroup::Uniform;
      t.junction_count = kind == LayoutKind::Planar35x35Al ? 1 : 2;
      if (omit.contains(r)) {
        t.excluded = true;
        t.exclusion_reason = "row omitted";
      }
      out.structures.push_back(std::move(t));
    }
  }
  return out;
}

/// Build any layout kind with the bundled reference data.
inline WaferLayout build_reference(LayoutKind kind, bool al_omission = true) {
  switch (kind) {
  case LayoutKind::Planar17Q: return build_planar_17q();
  case LayoutKind::Tsv17QDolan: return build_tsv_17q(Variant::Dolan, reference_tsvs());
  case LayoutKind::Tsv17QManhattan: return build_tsv_17q(Variant::Manhattan, reference_tsvs());
  case LayoutKind::Planar35x35Al:
    return build_35x35(kind, al_omission ? reference_al_omitted_rows() : std::vector<int>{});
  default: return build_35x35(kind);
  }
}

} // namespace layout
} // namespace jju
