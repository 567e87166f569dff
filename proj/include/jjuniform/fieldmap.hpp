#pragma once

// Model quantities sampled on a square grid over the wafer.

#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "csv_io.hpp"
#include "errors.hpp"
#include "layout.hpp"
#include "shadow_model.hpp"

namespace jju {

enum class FieldQuantity { BottomWidth, TopWidth, BottomThickness, LipWidth, LipHeight, TopWidthFull, Area };

inline std::string_view to_string(FieldQuantity q) {
  switch (q) {
  case FieldQuantity::BottomWidth: return "wb";
  case FieldQuantity::TopWidth: return "wt";
  case FieldQuantity::BottomThickness: return "tb";
  case FieldQuantity::LipWidth: return "wlip";
  case FieldQuantity::LipHeight: return "hlip";
  case FieldQuantity::TopWidthFull: return "wt_full";
  case FieldQuantity::Area: return "area";
  }
  return "?";
}

inline FieldQuantity parse_field_quantity(std::string_view s) {
  for (auto q : {FieldQuantity::BottomWidth, FieldQuantity::TopWidth, FieldQuantity::BottomThickness,
                 FieldQuantity::LipWidth, FieldQuantity::LipHeight, FieldQuantity::TopWidthFull,
                 FieldQuantity::Area})
    if (s == to_string(q)) return q;
  throw DataError("unknown field quantity '" + std::string(s) + "'");
}

struct FieldSpec {
  FieldQuantity quantity = FieldQuantity::Area;
  int points = 35;            // per axis, spanning [-extent, extent]
  double extent_mm = 50.0;
  WaferShape shape = WaferShape::Round100mm;
  Fidelity fidelity = Fidelity::Basic;
  JunctionDesign design{Variant::Manhattan, 200.0, 200.0};

  /// Points per axis for a given spacing; the spacing must tile the extent.
  static int points_for_step(double step_mm, double extent_mm = 50.0) {
    if (!(step_mm > 0.0)) throw DataError("grid step must be positive");
    const double n = 2.0 * extent_mm / step_mm;
    const double r = std::round(n);
    if (std::abs(n - r) > 1e-9 * std::max(1.0, n))
      throw DataError("grid step must divide the wafer extent evenly");
    return static_cast<int>(r) + 1;
  }
};

struct FieldSample {
  double x_mm = 0.0;
  double y_mm = 0.0;
  double value = 0.0;
};

namespace fieldmap {

inline double coordinate(int i, int n, double extent) {
  if (n == 1) return 0.0;
  return extent * static_cast<double>(2 * i - (n - 1)) / static_cast<double>(n - 1);
}

/// Value at one point; empty where the feature is pinched off or undefined.
inline std::optional<double> evaluate(const EvaporatorGeometry& g, const FieldSpec& s, WaferPoint p) {
  try {
    switch (s.quantity) {
    case FieldQuantity::BottomWidth: return shadow::actual_width_vertical(g, s.design.w_bottom_nm, p.x_mm);
    case FieldQuantity::TopWidth: return shadow::actual_width_horizontal(g, s.design.w_top_nm, p.y_mm);
    case FieldQuantity::BottomThickness: return shadow::bottom_thickness(g, p);
    case FieldQuantity::LipWidth: return shadow::lip_width(g, p);
    case FieldQuantity::LipHeight: return shadow::lip_height(g, s.design.w_top_nm, p);
    case FieldQuantity::TopWidthFull: return shadow::actual_top_width(g, s.design.w_top_nm, p);
    case FieldQuantity::Area: return shadow::actual_overlap_area(g, s.design, p, s.fidelity);
    }
  } catch (const FullyShadowed&) {
  }
  return std::nullopt;
}

/// Row-major samples from +y to -y, -x to +x, restricted to the wafer.
inline std::vector<FieldSample> sample(const EvaporatorGeometry& g, const FieldSpec& s) {
  g.validate();
  if (s.points < 1) throw DataError("field map needs at least one point per axis");
  std::vector<FieldSample> out;
  for (int r = 0; r < s.points; ++r) {
    const double y = coordinate(s.points - 1 - r, s.points, s.extent_mm);
    for (int c = 0; c < s.points; ++c) {
      const WaferPoint p{coordinate(c, s.points, s.extent_mm), y};
      if (!within_wafer(p, s.shape)) continue;
      if (auto v = evaluate(g, s, p)) out.push_back({p.x_mm, p.y_mm, *v});
    }
  }
  return out;
}

inline void write_csv(std::ostream& os, const std::vector<FieldSample>& samples) {
  os << "x_mm,y_mm,value\n";
  for (const auto& s : samples) os << csv::num(s.x_mm) << ',' << csv::num(s.y_mm) << ',' << csv::num(s.value) << '\n';
}

} // namespace fieldmap
} // namespace jju
