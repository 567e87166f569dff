#pragma once

// Position-dependent pre-compensation of designed electrode widths so that
// the actual overlap area is uniform across the wafer.

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <tuple>

#include "errors.hpp"
#include "layout.hpp"
#include "shadow_model.hpp"
#include "synth.hpp"

namespace jju {

struct CompensationLimits {
  double min_width_nm = 1.0;
  double max_width_nm = 1000.0;
  double rel_tolerance = 1e-12; // on the area residual
  int max_iterations = 200;
};

enum class CompensationMode { Aspect, FixedTop };

namespace compensation {

namespace detail {

// Forward area with pinched-off electrodes counted as zero area, which
// keeps the map continuous for bracketing.
inline double area_or_zero(const EvaporatorGeometry& g, const JunctionDesign& d, WaferPoint p,
                           Fidelity f) {
  try {
    return shadow::actual_overlap_area(g, d, p, f);
  } catch (const FullyShadowed&) {
    return 0.0;
  }
}

inline JunctionDesign with_top(JunctionDesign d, double w_top, double aspect) {
  d.w_top_nm = w_top;
  d.w_bottom_nm = aspect * w_top;
  return d;
}

inline std::string where(WaferPoint p) {
  return "(" + std::to_string(p.x_mm) + ", " + std::to_string(p.y_mm) + ") mm";
}

// Root of the increasing map `f` (area minus target) on [a, b] by Illinois
// regula falsi over a sign bracket, so kinks in the forward map are harmless.
template <class F>
double solve_width(F f, double a, double b, double target_um2, WaferPoint p, const CompensationLimits& lim) {
  double fa = f(a), fb = f(b);
  if (fb < 0.0)
    throw UnattainableTarget("target area " + std::to_string(target_um2) + " um^2 needs widths beyond " +
                             std::to_string(b) + " nm at " + where(p));
  if (fa > 0.0)
    throw UnattainableTarget("target area " + std::to_string(target_um2) + " um^2 needs widths below " +
                             std::to_string(a) + " nm at " + where(p));
  if (fa == 0.0) return a;
  int side = 0;
  double w = b;
  for (int it = 0; it < lim.max_iterations; ++it) {
    w = (a * fb - b * fa) / (fb - fa);
    if (!(w > a && w < b)) w = 0.5 * (a + b);
    const double fw = f(w);
    if (std::abs(fw) <= lim.rel_tolerance * target_um2) return w;
    if ((fw > 0.0) == (fb > 0.0)) {
      b = w;
      fb = fw;
      if (side == 1) fa /= 2.0;
      side = 1;
    } else {
      a = w;
      fa = fw;
      if (side == -1) fb /= 2.0;
      side = -1;
    }
    if (b - a <= std::numeric_limits<double>::epsilon() * b) break;
  }
  return w;
}

inline void check(const EvaporatorGeometry& geom, double target_um2) {
  geom.validate();
  if (!(target_um2 > 0.0)) throw DataError("compensation target area must be positive");
}

} // namespace detail

/// Designed widths (W_b = aspect * W_t) whose actual overlap area at `p`
/// equals `target_um2`.
inline JunctionDesign precompensate(const EvaporatorGeometry& geom, double target_um2,
                                    WaferPoint p, Fidelity fidelity, double aspect,
                                    JunctionDesign base = {}, const CompensationLimits& lim = {}) {
  detail::check(geom, target_um2);
  if (!(aspect > 0.0)) throw DataError("compensation aspect ratio must be positive");
  auto f = [&](double w) {
    return detail::area_or_zero(geom, detail::with_top(base, w, aspect), p, fidelity) - target_um2;
  };
  const double hi = std::min(lim.max_width_nm, lim.max_width_nm / aspect);
  return detail::with_top(base, detail::solve_width(f, lim.min_width_nm, hi, target_um2, p, lim), aspect);
}

/// Designed bottom width at the fixed top width of `base` whose actual
/// overlap area at `p` equals `target_um2`.
inline JunctionDesign precompensate_bottom(const EvaporatorGeometry& geom, double target_um2,
                                           WaferPoint p, Fidelity fidelity, JunctionDesign base,
                                           const CompensationLimits& lim = {}) {
  detail::check(geom, target_um2);
  if (!(base.w_top_nm > 0.0)) throw DataError("fixed top width must be positive");
  auto f = [&](double w) {
    JunctionDesign d = base;
    d.w_bottom_nm = w;
    return detail::area_or_zero(geom, d, p, fidelity) - target_um2;
  };
  base.w_bottom_nm = detail::solve_width(f, lim.min_width_nm, lim.max_width_nm, target_um2, p, lim);
  return base;
}

inline std::string to_string(CompensationMode m) { return m == CompensationMode::Aspect ? "aspect" : "fixed_top"; }

inline CompensationMode parse_mode(const std::string& s) {
  if (s == "aspect") return CompensationMode::Aspect;
  if (s == "fixed_top") return CompensationMode::FixedTop;
  throw DataError("unknown compensation mode '" + s + "' (aspect, fixed_top)");
}

/// Copy of `layout` with every viable structure redesigned so its actual
/// area matches the actual area of the structure of the same design nearest
/// the centre. Aspect mode keeps each design's W_b/W_t; fixed-top mode keeps
/// W_t and solves for W_b. Structures that cannot reach the target are
/// marked excluded.
inline WaferLayout compensated_layout(const WaferLayout& layout, const GeometrySet& geom,
                                      Fidelity fidelity, const CompensationLimits& lim = {},
                                      CompensationMode mode = CompensationMode::Aspect) {
  WaferLayout out = layout;
  auto key = [](const JunctionDesign& d) { return std::tuple(d.variant, d.w_bottom_nm, d.w_top_nm); };
  std::map<std::tuple<Variant, double, double>, const TestStructure*> centre;
  for (const auto& s : layout.structures) {
    if (s.excluded) continue;
    auto& c = centre[key(s.design)];
    if (!c || s.position.radius_mm() < c->position.radius_mm()) c = &s;
  }
  auto fid_of = [&](const TestStructure& s) {
    return s.design.variant == Variant::Dolan ? Fidelity::Basic : fidelity;
  };
  std::map<std::tuple<Variant, double, double>, double> target;
  for (const auto& [k, c] : centre)
    target[k] = shadow::actual_overlap_area(geom.for_variant(c->design.variant), c->design, c->position, fid_of(*c));
  for (auto& s : out.structures) {
    if (s.excluded) continue;
    const double t = target.at(key(s.design));
    const auto& g = geom.for_variant(s.design.variant);
    try {
      s.design = mode == CompensationMode::FixedTop
                     ? precompensate_bottom(g, t, s.position, fid_of(s), s.design, lim)
                     : precompensate(g, t, s.position, fid_of(s), s.design.w_bottom_nm / s.design.w_top_nm,
                                     s.design, lim);
      s.a_overlap_designed_um2 = s.design.designed_area_um2();
    } catch (const UnattainableTarget& e) {
      s.excluded = true;
      s.exclusion_reason = e.what();
    }
  }
  return out;
}

} // namespace compensation
} // namespace jju
