#pragma once

// Geometric model of resist shadowing under oblique double-angle
// evaporation from a point source.
//
// Frame: wafer-fixed, origin at the wafer centre, +y toward the in-plane
// projection of the crucible during the top-electrode evaporation. The
// bottom-electrode evaporation is the same geometry rotated 90 degrees in
// azimuth, so vertical electrodes lose width with |x| and horizontal ones
// with |y|. Shadowing of the top electrode by the bottom electrode itself is
// not modelled.
//
// Lengths are computed in nanometres. Wafer coordinates and evaporator
// distances are taken in millimetres at the interface.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include "errors.hpp"

namespace jju {

inline constexpr double kNmPerMm = 1.0e6;
inline constexpr double kNm2PerUm2 = 1.0e6;

enum class Variant { Dolan, Manhattan };

inline std::string_view to_string(Variant v) {
  return v == Variant::Dolan ? "dolan" : "manhattan";
}

inline Variant parse_variant(std::string_view s) {
  if (s == "dolan") return Variant::Dolan;
  if (s == "manhattan") return Variant::Manhattan;
  throw DataError("unknown junction variant '" + std::string(s) + "'");
}

/// How much of the shadowing physics enters the overlap area.
///   Basic    - widths narrowed by parallax only
///   Sidewall - plus the two vertical sidewalls of the bottom electrode
///   Full     - plus the lip and resist growth left by the first evaporation
enum class Fidelity { Basic, Sidewall, Full };

inline std::string_view to_string(Fidelity f) {
  switch (f) {
  case Fidelity::Basic: return "basic";
  case Fidelity::Sidewall: return "sidewall";
  case Fidelity::Full: return "full";
  }
  return "?";
}

inline Fidelity parse_fidelity(std::string_view s) {
  if (s == "basic") return Fidelity::Basic;
  if (s == "sidewall") return Fidelity::Sidewall;
  if (s == "full") return Fidelity::Full;
  throw DataError("unknown model fidelity '" + std::string(s) + "'");
}

struct WaferPoint {
  double x_mm = 0.0;
  double y_mm = 0.0;

  double radius_mm() const { return std::hypot(x_mm, y_mm); }
  friend bool operator==(const WaferPoint&, const WaferPoint&) = default;
};

/// E-beam evaporator configuration. Defaults are the Manhattan process.
struct EvaporatorGeometry {
  double d_prime_mm = 650.0;  // crucible to sample-holder pivot
  double r_pivot_mm = 62.5;   // pivot to wafer-surface centre
  double alpha_deg = 35.0;    // wafer tilt
  double h_resist_nm = 600.0; // top (imaging) resist thickness
  double t_bottom_nm = 35.0;  // bottom electrode thickness at the centre, normal incidence
  double dw_offset_nm = 25.0; // constant widening from exposure and development

  static EvaporatorGeometry manhattan() { return {}; }
  static EvaporatorGeometry dolan() {
    EvaporatorGeometry g;
    g.alpha_deg = 15.0;
    return g;
  }

  double alpha_rad() const { return alpha_deg * std::numbers::pi / 180.0; }

  void validate() const {
    if (!(r_pivot_mm > 0.0) || !(d_prime_mm > r_pivot_mm))
      throw InvalidGeometry("evaporator geometry requires d_prime > r_pivot > 0");
    if (!(alpha_deg >= 0.0 && alpha_deg < 90.0))
      throw InvalidGeometry("wafer tilt must lie in [0, 90) degrees");
    if (!(h_resist_nm > 0.0)) throw InvalidGeometry("resist thickness must be positive");
    if (!(t_bottom_nm > 0.0)) throw InvalidGeometry("bottom electrode thickness must be positive");
    if (!(dw_offset_nm >= 0.0)) throw InvalidGeometry("width offset must be non-negative");
    if (!(d_prime_mm * std::cos(alpha_rad()) - r_pivot_mm > 0.0))
      throw InvalidGeometry("source-plane distance D = d_prime*cos(alpha) - r_pivot must be positive");
  }

  friend bool operator==(const EvaporatorGeometry&, const EvaporatorGeometry&) = default;
};

/// Designed overlap length along y of Dolan junctions (both electrodes run
/// along y, so the overlap is W_t by this constant).
inline constexpr double kDolanOverlapLengthNm = 160.0;

struct JunctionDesign {
  Variant variant = Variant::Manhattan;
  double w_bottom_nm = 200.0;
  double w_top_nm = 200.0;
  double overlap_length_nm = kDolanOverlapLengthNm; // Dolan only

  /// Designed single-junction overlap area in um^2.
  double designed_area_um2() const {
    if (variant == Variant::Dolan) return w_top_nm * overlap_length_nm / kNm2PerUm2;
    return w_bottom_nm * w_top_nm / kNm2PerUm2;
  }

  friend bool operator==(const JunctionDesign&, const JunctionDesign&) = default;
};

namespace shadow {

namespace detail {

// Derived quantities of one geometry, all in nm.
struct Frame {
  double d;      // crucible to wafer plane
  double cy;     // in-plane crucible offset, D' sin(alpha)
  double base;   // T_b (D' - R)^2
  double h;

  explicit Frame(const EvaporatorGeometry& g) {
    g.validate();
    const double dp = g.d_prime_mm * kNmPerMm;
    const double r = g.r_pivot_mm * kNmPerMm;
    d = dp * std::cos(g.alpha_rad()) - r;
    cy = dp * std::sin(g.alpha_rad());
    base = g.t_bottom_nm * (dp - r) * (dp - r);
    h = g.h_resist_nm;
  }

  double dist_cubed(double x_nm, double y_nm) const {
    const double dy = y_nm - cy;
    const double r = std::sqrt(x_nm * x_nm + dy * dy + d * d);
    return r * r * r;
  }
};

inline double positive_or_throw(double w, const char* what) {
  if (!(w > 0.0))
    throw FullyShadowed(std::string(what) + " is fully shadowed (actual width " +
                        std::to_string(w) + " nm)");
  return w;
}

} // namespace detail

/// D = D' cos(alpha) - R, in mm.
inline double source_distance_mm(const EvaporatorGeometry& g) {
  return detail::Frame(g).d / kNmPerMm;
}

// Width lost to parallax at lateral offset |s| from the centre, in nm.
inline double parallax_loss_nm(const EvaporatorGeometry& g, double s_mm) {
  const detail::Frame f(g);
  return std::abs(s_mm) * kNmPerMm * f.h / f.d;
}

/// Actual width of an electrode running along y. Used for both
/// Dolan electrodes and the Manhattan bottom electrode.
inline double actual_width_vertical(const EvaporatorGeometry& g, double w_designed_nm,
                                    double x_mm) {
  const double w = w_designed_nm + g.dw_offset_nm - parallax_loss_nm(g, x_mm);
  return detail::positive_or_throw(w, "vertical electrode");
}

/// Same law for an electrode running along x; depends on y only.
inline double actual_width_horizontal(const EvaporatorGeometry& g, double w_designed_nm,
                                      double y_mm) {
  const double w = w_designed_nm + g.dw_offset_nm - parallax_loss_nm(g, y_mm);
  return detail::positive_or_throw(w, "horizontal electrode");
}

/// Bottom-electrode thickness T'_b(r); also the resist height gained from
/// the first evaporation.
inline double bottom_thickness(const EvaporatorGeometry& g, WaferPoint p) {
  const detail::Frame f(g);
  return f.base * f.d / f.dist_cubed(p.x_mm * kNmPerMm, p.y_mm * kNmPerMm);
}

inline double resist_growth(const EvaporatorGeometry& g, WaferPoint p) {
  return bottom_thickness(g, p);
}

/// Lip width left on the southern resist edge. Evaluated exactly as the
/// closed form is written, leading minus sign included, so the value is
/// negative everywhere on the wafer.
inline double lip_width(const EvaporatorGeometry& g, WaferPoint p) {
  const detail::Frame f(g);
  const double y = p.y_mm * kNmPerMm;
  if (!(y < f.cy)) throw InvalidGeometry("lip width undefined for y >= D' sin(alpha)");
  return -f.base * (f.cy - y) / f.dist_cubed(p.x_mm * kNmPerMm, y);
}

inline double lip_height(const EvaporatorGeometry& g, double w_top_nm, WaferPoint p) {
  const detail::Frame f(g);
  const double y = p.y_mm * kNmPerMm;
  if (!(y < f.cy)) throw InvalidGeometry("lip height undefined for y >= D' sin(alpha)");
  return f.d * w_top_nm / (f.cy - y);
}

/// The two candidate shadow losses of the y < 0 branch of the full top-width
/// law: resist edge, and lip edge. Exposed for testing the branch selection.
struct TopShadowTerms {
  double resist_nm;
  double lip_nm;
};

inline TopShadowTerms top_shadow_terms(const EvaporatorGeometry& g, double w_top_nm,
                                       WaferPoint p) {
  const detail::Frame f(g);
  const double dh = resist_growth(g, p);
  const double ay = std::abs(p.y_mm) * kNmPerMm;
  const double h_eff = f.h + dh;
  const double hlip_eff = lip_height(g, w_top_nm, p) + dh;
  const double wlip = lip_width(g, p);
  return {h_eff * ay / f.d, wlip + hlip_eff * ay / f.d};
}

/// Top-electrode width including the first evaporation's lip and resist
/// growth. For y >= 0 the lip width is subtracted alongside the
/// resist shadow; for y < 0 the larger of the resist and lip shadows wins.
inline double actual_top_width(const EvaporatorGeometry& g, double w_top_nm, WaferPoint p) {
  const TopShadowTerms t = top_shadow_terms(g, w_top_nm, p);
  double loss;
  if (p.y_mm >= 0.0)
    loss = lip_width(g, p) + t.resist_nm;
  else
    loss = std::max(t.resist_nm, t.lip_nm);
  return detail::positive_or_throw(w_top_nm + g.dw_offset_nm - loss, "top electrode");
}

/// Actual single-junction overlap area in um^2.
inline double actual_overlap_area(const EvaporatorGeometry& g, const JunctionDesign& design,
                                  WaferPoint p, Fidelity fidelity) {
  if (design.variant == Variant::Dolan) {
    if (fidelity != Fidelity::Basic)
      throw DataError("Dolan junctions are modelled at basic fidelity only");
    // Both electrodes run along y; the narrower top electrode sets the width.
    actual_width_vertical(g, design.w_bottom_nm, p.x_mm);
    const double wt = actual_width_vertical(g, design.w_top_nm, p.x_mm);
    return wt * design.overlap_length_nm / kNm2PerUm2;
  }
  double wb = actual_width_vertical(g, design.w_bottom_nm, p.x_mm);
  double wt = 0.0;
  switch (fidelity) {
  case Fidelity::Basic:
    wt = actual_width_horizontal(g, design.w_top_nm, p.y_mm);
    break;
  case Fidelity::Sidewall:
    wb += 2.0 * bottom_thickness(g, p);
    wt = actual_width_horizontal(g, design.w_top_nm, p.y_mm);
    break;
  case Fidelity::Full:
    wb += 2.0 * bottom_thickness(g, p);
    wt = actual_top_width(g, design.w_top_nm, p);
    break;
  }
  return wb * wt / kNm2PerUm2;
}

} // namespace shadow
} // namespace jju
