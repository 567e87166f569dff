#pragma once

// Conductance analysis: absolute and relative outlier filters, per-die
// regression, conductance CV, frequency RSD, mean-normalized heatmaps and
// effective conductivity versus radial distance.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "errors.hpp"
#include "least_squares.hpp"
#include "shadow_model.hpp"
#include "synth.hpp"

namespace jju {

enum class Regressor { VariableWidth, OverlapArea };

inline std::string_view to_string(Regressor r) {
  return r == Regressor::VariableWidth ? "variable_width" : "overlap_area";
}

inline Regressor parse_regressor(std::string_view s) {
  if (s == "variable_width") return Regressor::VariableWidth;
  if (s == "overlap_area") return Regressor::OverlapArea;
  throw DataError("unknown regressor '" + std::string(s) + "'");
}

struct FilterConfig {
  double abs_low = 20.0;       // uS
  double abs_high = 500.0;     // uS
  double rel_threshold = 0.70; // fraction of fit (or mean)
  Regressor regressor = Regressor::VariableWidth;

  void validate() const {
    if (!(abs_low > 0.0 && abs_low < abs_high))
      throw DataError("filter requires 0 < abs_low < abs_high");
    if (!(rel_threshold > 0.0 && rel_threshold < 1.0))
      throw DataError("filter requires 0 < rel_threshold < 1");
  }
};

struct FrequencyModel {
  double f_c_mhz = 270.0;
  double m_ghz_per_ms = 134.0; // equal to MHz per uS

  void validate() const {
    if (!(f_c_mhz > 0.0 && m_ghz_per_ms > 0.0))
      throw DataError("frequency model constants must be positive");
  }
};

struct Partition {
  std::vector<MeasurementRecord> kept;
  std::vector<MeasurementRecord> rejected;
};

struct DieKey {
  int x = 0;
  int y = 0;
  auto operator<=>(const DieKey&) const = default;
};

inline std::string to_string(DieKey d) {
  return "(" + std::to_string(d.x) + "," + std::to_string(d.y) + ")";
}

namespace analysis {

/// Transmon f01 in MHz from pair conductance in uS.
inline double predicted_frequency(double g_us, const FrequencyModel& m = {}) {
  if (g_us < 0.0) throw DataError("predicted_frequency: negative conductance");
  return std::sqrt(8.0 * m.f_c_mhz * m.m_ghz_per_ms * g_us) - m.f_c_mhz;
}

/// Width of the swept electrode (W_b for Manhattan, W_t for Dolan), or the
/// designed single-junction area.
inline double regressor_value(const MeasurementRecord& r, Regressor reg) {
  if (reg == Regressor::OverlapArea) return r.a_overlap_designed_um2;
  return r.design.variant == Variant::Dolan ? r.design.w_top_nm : r.design.w_bottom_nm;
}

inline Partition absolute_filter(const std::vector<MeasurementRecord>& records,
                                 const FilterConfig& cfg) {
  cfg.validate();
  Partition p;
  for (const auto& r : records) {
    if (r.g_us < cfg.abs_low || r.g_us > cfg.abs_high)
      p.rejected.push_back(r);
    else
      p.kept.push_back(r);
  }
  return p;
}

inline std::vector<double> conductances(const std::vector<MeasurementRecord>& records) {
  std::vector<double> g;
  g.reserve(records.size());
  for (const auto& r : records) g.push_back(r.g_us);
  return g;
}

/// Relative filter for arrays of identical designs: drop G below the
/// configured fraction of the mean.
inline Partition mean_filter(const std::vector<MeasurementRecord>& records,
                             const FilterConfig& cfg) {
  cfg.validate();
  if (records.empty()) throw DataError("mean_filter: no records");
  const auto g = conductances(records);
  const double cut = cfg.rel_threshold * lsq::shifted_mean(g);
  Partition p;
  for (const auto& r : records) (r.g_us < cut ? p.rejected : p.kept).push_back(r);
  return p;
}

struct RegressionFit {
  lsq::LineFit initial; // pass 1, all input records
  lsq::LineFit line;    // pass 2, kept records
  std::vector<std::pair<std::string, double>> residuals; // pass 2, uS
  std::vector<std::string> kept_ids;
  std::vector<std::string> rejected_ids;
  std::vector<MeasurementRecord> kept;

  double rss() const {
    double s = 0.0;
    for (const auto& [id, r] : residuals) s += r * r;
    return s;
  }
};

inline lsq::LineFit fit_records(const std::vector<MeasurementRecord>& records, Regressor reg,
                                std::string_view label) {
  std::vector<double> x, y;
  for (const auto& r : records) {
    x.push_back(regressor_value(r, reg));
    y.push_back(r.g_us);
  }
  if (lsq::distinct_count(x) < 3)
    throw Underdetermined("regression for " + std::string(label) +
                          " needs at least 3 distinct regressor values");
  return lsq::fit_line(x, y);
}

/// Two-pass regression of G against the regressor within one die. Points
/// below the configured fraction of the first fit are taken as pairs with
/// one open junction; the survivors are refit.
inline RegressionFit regression_filter_die(const std::vector<MeasurementRecord>& records,
                                           const FilterConfig& cfg,
                                           std::string_view die_label = "die") {
  cfg.validate();
  RegressionFit fit;
  fit.initial = fit_records(records, cfg.regressor, die_label);
  for (const auto& r : records) {
    if (r.g_us < cfg.rel_threshold * fit.initial(regressor_value(r, cfg.regressor))) {
      fit.rejected_ids.push_back(r.structure_id);
    } else {
      fit.kept_ids.push_back(r.structure_id);
      fit.kept.push_back(r);
    }
  }
  fit.line = fit_records(fit.kept, cfg.regressor, die_label);
  for (const auto& r : fit.kept)
    fit.residuals.emplace_back(r.structure_id, r.g_us - fit.line(regressor_value(r, cfg.regressor)));
  return fit;
}

inline std::map<DieKey, std::vector<MeasurementRecord>>
group_by_die(const std::vector<MeasurementRecord>& records) {
  std::map<DieKey, std::vector<MeasurementRecord>> out;
  for (const auto& r : records) out[{r.die_x, r.die_y}].push_back(r);
  return out;
}

enum class Scope { Die, Wafer };

struct CvEntry {
  Variant variant = Variant::Manhattan;
  std::optional<DieKey> die; // empty at wafer scope
  double area_um2 = 0.0;
  std::size_t count = 0;
  double mean_us = 0.0;
  double stddev_us = 0.0;   // population
  std::optional<double> cv; // empty for groups of one
};

/// Conductance CV per designed area (and per die at die scope), population
/// standard deviation. Groups are ordered by variant, die, area.
inline std::vector<CvEntry> conductance_cv(const std::vector<MeasurementRecord>& records,
                                           Scope scope) {
  using Key = std::tuple<int, int, int, double>;
  std::map<Key, std::vector<double>> groups;
  for (const auto& r : records) {
    const int v = static_cast<int>(r.design.variant);
    const Key k = scope == Scope::Die ? Key{v, r.die_x, r.die_y, r.a_overlap_designed_um2}
                                      : Key{v, 0, 0, r.a_overlap_designed_um2};
    groups[k].push_back(r.g_us);
  }
  std::vector<CvEntry> out;
  for (const auto& [k, g] : groups) {
    CvEntry e;
    e.variant = static_cast<Variant>(std::get<0>(k));
    if (scope == Scope::Die) e.die = DieKey{std::get<1>(k), std::get<2>(k)};
    e.area_um2 = std::get<3>(k);
    e.count = g.size();
    e.mean_us = lsq::shifted_mean(g);
    e.stddev_us = lsq::population_stddev(g, e.mean_us);
    if (g.size() > 1) e.cv = e.stddev_us / e.mean_us;
    out.push_back(e);
  }
  return out;
}

/// Residuals in predicted frequency, f(G_measured) - f(G_fit), MHz.
inline std::vector<double> frequency_residuals(const std::vector<MeasurementRecord>& records,
                                               const lsq::LineFit& fit, Regressor reg,
                                               const FrequencyModel& model) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const double g_fit = fit(regressor_value(r, reg));
    if (g_fit < 0.0)
      throw NumericalError("fit predicts negative conductance for '" + r.structure_id + "'");
    out.push_back(predicted_frequency(r.g_us, model) - predicted_frequency(g_fit, model));
  }
  return out;
}

/// Die-scope frequency RSD from each die's second-pass fit (sample std).
inline std::map<DieKey, double> frequency_rsd_die(const std::map<DieKey, RegressionFit>& fits,
                                                  Regressor reg, const FrequencyModel& model) {
  std::map<DieKey, double> out;
  for (const auto& [die, fit] : fits)
    out[die] = lsq::sample_stddev(frequency_residuals(fit.kept, fit.line, reg, model));
  return out;
}

/// Wafer-scope frequency RSD: one fit over all kept records.
inline double frequency_rsd_wafer(const std::vector<MeasurementRecord>& kept, Regressor reg,
                                  const FrequencyModel& model) {
  const auto line = fit_records(kept, reg, "wafer");
  return lsq::sample_stddev(frequency_residuals(kept, line, reg, model));
}

inline double residual_sum_of_squares(const std::vector<MeasurementRecord>& records,
                                      const lsq::LineFit& fit, Regressor reg) {
  double s = 0.0;
  for (const auto& r : records) {
    const double e = r.g_us - fit(regressor_value(r, reg));
    s += e * e;
  }
  return s;
}

struct GridSite {
  std::string id;
  WaferPoint position;
};

/// Mean-normalized conductance on the grid spanned by the distinct x and y
/// positions of the sites. Rows run from +y to -y, columns from -x to +x.
struct HeatmapGrid {
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<std::string> ids;             // row-major, empty where no structure
  std::vector<std::optional<double>> cells; // row-major, empty = blank

  std::size_t rows() const { return ys.size(); }
  std::size_t cols() const { return xs.size(); }
  const std::optional<double>& at(std::size_t r, std::size_t c) const { return cells[r * cols() + c]; }

  std::optional<double> value_of(const std::string& id) const {
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (ids[i] == id) return cells[i];
    return std::nullopt;
  }
};

namespace detail {
// Grid coordinates snapped to 1 nm to merge positions equal up to round-off.
inline double snap(double mm) { return std::round(mm * 1e6) / 1e6; }
} // namespace detail

inline HeatmapGrid normalized_heatmap(const std::vector<MeasurementRecord>& kept,
                                      const std::vector<GridSite>& sites) {
  std::map<double, std::vector<double>> by_area;
  for (const auto& r : kept) by_area[r.a_overlap_designed_um2].push_back(r.g_us);
  std::map<double, double> mean_of;
  for (const auto& [a, g] : by_area) mean_of[a] = lsq::shifted_mean(g);

  HeatmapGrid grid;
  std::set<double> xs, ys;
  for (const auto& s : sites) {
    xs.insert(detail::snap(s.position.x_mm));
    ys.insert(detail::snap(s.position.y_mm));
  }
  grid.xs.assign(xs.begin(), xs.end());
  grid.ys.assign(ys.rbegin(), ys.rend());
  grid.ids.assign(grid.rows() * grid.cols(), {});
  grid.cells.assign(grid.rows() * grid.cols(), std::nullopt);

  std::unordered_map<std::string, const MeasurementRecord*> kept_by_id;
  for (const auto& r : kept) kept_by_id[r.structure_id] = &r;
  for (const auto& s : sites) {
    const auto c = static_cast<std::size_t>(
        std::lower_bound(grid.xs.begin(), grid.xs.end(), detail::snap(s.position.x_mm)) - grid.xs.begin());
    const auto r = static_cast<std::size_t>(
        std::lower_bound(grid.ys.begin(), grid.ys.end(), detail::snap(s.position.y_mm), std::greater<>()) -
        grid.ys.begin());
    const std::size_t i = r * grid.cols() + c;
    grid.ids[i] = s.id;
    if (auto it = kept_by_id.find(s.id); it != kept_by_id.end())
      grid.cells[i] = it->second->g_us / mean_of.at(it->second->a_overlap_designed_um2);
  }
  return grid;
}

inline std::vector<GridSite> sites_of(const std::vector<MeasurementRecord>& records) {
  std::vector<GridSite> out;
  for (const auto& r : records) out.push_back({r.structure_id, r.position});
  return out;
}

/// Per-junction area lookup used for effective conductivity.
using AreaSource = std::function<double(const MeasurementRecord&)>;

inline AreaSource designed_areas() {
  return [](const MeasurementRecord& r) { return r.a_overlap_designed_um2; };
}

inline AreaSource model_areas(GeometrySet geom, Fidelity fidelity) {
  return [geom, fidelity](const MeasurementRecord& r) {
    const Fidelity f = r.design.variant == Variant::Dolan ? Fidelity::Basic : fidelity;
    return shadow::actual_overlap_area(geom.for_variant(r.design.variant), r.design, r.position, f);
  };
}

/// Areas measured per structure, e.g. from micrograph extraction.
inline AreaSource extracted_areas(std::unordered_map<std::string, double> by_id) {
  return [by_id = std::move(by_id)](const MeasurementRecord& r) {
    auto it = by_id.find(r.structure_id);
    if (it == by_id.end()) throw DataError("no extracted area for '" + r.structure_id + "'");
    return it->second;
  };
}

struct ConductivityPoint {
  std::string id;
  double d_mm = 0.0;
  double conductivity = 0.0; // uS/um^2
};

inline std::vector<ConductivityPoint> effective_conductivity(
    const std::vector<MeasurementRecord>& records, const AreaSource& area) {
  std::vector<ConductivityPoint> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const double total = r.junction_count * area(r);
    if (!(total > 0.0)) throw DataError("zero junction area for '" + r.structure_id + "'");
    out.push_back({r.structure_id, r.position.radius_mm(), r.g_us / total});
  }
  return out;
}

struct QuadraticFit {
  double a = 0.0, b = 0.0, c = 0.0;
  double operator()(double d) const { return a + b * d + c * d * d; }
};

inline QuadraticFit quadratic_radial_fit(const std::vector<ConductivityPoint>& points) {
  std::vector<double> d, v;
  for (const auto& p : points) {
    d.push_back(p.d_mm);
    v.push_back(p.conductivity);
  }
  const auto c = lsq::polyfit(d, v, 2);
  return {c[0], c[1], c[2]};
}

struct AreaSample {
  WaferPoint position;
  double area_um2 = 0.0;
};

/// Least-squares estimate of the width offset from actual overlap areas,
/// using the parallax-only area law with every other constant fixed.
inline double fit_width_offset(const std::vector<AreaSample>& samples, EvaporatorGeometry geom,
                               const JunctionDesign& design, double lo_nm = -100.0,
                               double hi_nm = 200.0) {
  if (samples.empty()) throw DataError("fit_width_offset: no samples");
  geom.dw_offset_nm = 0.0;
  geom.validate();
  struct Loss { double bx, ty; }; // widths at zero offset, may be negative
  std::vector<Loss> base;
  for (const auto& s : samples) {
    base.push_back({design.w_bottom_nm - shadow::parallax_loss_nm(geom, s.position.x_mm),
                    design.w_top_nm - shadow::parallax_loss_nm(geom, s.position.y_mm)});
  }
  auto cost = [&](double off) {
    double acc = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double model = (base[i].bx + off) * (base[i].ty + off) / kNm2PerUm2;
      const double e = samples[i].area_um2 - model;
      acc += e * e;
    }
    return acc;
  };
  // Golden-section search; the cost is a convex quartic over physical offsets.
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo_nm, b = hi_nm;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = cost(x1), f2 = cost(x2);
  while (b - a > 1e-9) {
    if (f1 < f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - phi * (b - a); f1 = cost(x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + phi * (b - a); f2 = cost(x2);
    }
  }
  return 0.5 * (a + b);
}

/// Undo pad, cabling and contact resistance and the substrate leak.
inline std::vector<MeasurementRecord> deembed(std::vector<MeasurementRecord> records,
                                              const ParasiticsModel& p) {
  for (auto& r : records) {
    const double g = r.g_us - p.substrate_parallel;
    if (g <= 0.0) {
      r.g_us = 0.0;
      continue;
    }
    const double inv = 1.0 / g - p.series_resistance(r.position.radius_mm()) * 1e-6;
    r.g_us = inv > 0.0 ? 1.0 / inv : kShortConductanceUs;
  }
  return records;
}

struct AnalysisOptions {
  FilterConfig filter;
  FrequencyModel frequency;
  bool dual_rsd = false; // also report RSD without the relative filter
  bool deembed = false;
  ParasiticsModel deembed_parasitics;
  bool model_conductivity = true; // effective conductivity with model areas
  GeometrySet geometry;
  Fidelity fidelity = Fidelity::Full;
};

struct VariantReport {
  Variant variant = Variant::Manhattan;
  bool uniform_design = false;
  std::size_t total = 0;
  std::size_t after_absolute = 0;
  std::size_t kept = 0;
  std::vector<std::string> rejected_absolute;
  std::vector<std::string> rejected_relative;
  std::vector<CvEntry> cv_wafer;
  std::vector<CvEntry> cv_die;
  std::map<DieKey, double> rsd_die;
  std::optional<double> rsd_die_mean;
  std::optional<double> rsd_wafer;
  std::map<DieKey, double> rsd_die_unfiltered;
  std::optional<double> rsd_die_mean_unfiltered;
  std::optional<double> rsd_wafer_unfiltered;
  HeatmapGrid heatmap;
  std::vector<ConductivityPoint> conductivity_designed;
  std::vector<ConductivityPoint> conductivity_model;
  std::optional<QuadraticFit> conductivity_fit_designed;
  std::optional<QuadraticFit> conductivity_fit_model;
  std::vector<MeasurementRecord> kept_records;

  double yield() const { return total ? static_cast<double>(kept) / static_cast<double>(total) : 0.0; }
};

struct UniformityReport {
  std::vector<VariantReport> variants;
};

namespace detail {

inline bool same_design(const std::vector<MeasurementRecord>& records) {
  for (const auto& r : records)
    if (!(r.design == records.front().design)) return false;
  return true;
}

inline std::optional<double> mean_of_map(const std::map<DieKey, double>& m) {
  if (m.empty()) return std::nullopt;
  double s = 0.0;
  for (const auto& [k, v] : m) s += v;
  return s / static_cast<double>(m.size());
}

inline std::optional<QuadraticFit> try_radial_fit(const std::vector<ConductivityPoint>& pts) {
  std::set<double> d;
  for (const auto& p : pts) d.insert(p.d_mm);
  if (d.size() < 3) return std::nullopt;
  return quadratic_radial_fit(pts);
}

} // namespace detail

/// Full pipeline for one variant's records. `sites` lists every viable
/// structure of the variant (records supply it when empty).
inline VariantReport analyze_variant(Variant variant, std::vector<MeasurementRecord> records,
                                     std::vector<GridSite> sites, const AnalysisOptions& opt) {
  opt.filter.validate();
  opt.frequency.validate();
  if (opt.deembed) records = deembed(std::move(records), opt.deembed_parasitics);
  if (sites.empty()) sites = sites_of(records);

  VariantReport rep;
  rep.variant = variant;
  rep.total = sites.size();
  if (records.empty()) return rep;
  rep.uniform_design = detail::same_design(records);

  auto abs = absolute_filter(records, opt.filter);
  rep.after_absolute = abs.kept.size();
  for (const auto& r : abs.rejected) rep.rejected_absolute.push_back(r.structure_id);

  const Regressor reg = opt.filter.regressor;
  if (rep.uniform_design) {
    if (!abs.kept.empty()) {
      auto rel = mean_filter(abs.kept, opt.filter);
      for (const auto& r : rel.rejected) rep.rejected_relative.push_back(r.structure_id);
      rep.kept_records = std::move(rel.kept);
    }
  } else {
    std::map<DieKey, RegressionFit> fits;
    for (auto& [die, recs] : group_by_die(abs.kept)) {
      auto fit = regression_filter_die(recs, opt.filter, "die " + to_string(die));
      for (const auto& id : fit.rejected_ids) rep.rejected_relative.push_back(id);
      for (const auto& r : fit.kept) rep.kept_records.push_back(r);
      if (opt.dual_rsd)
        rep.rsd_die_unfiltered[die] = lsq::sample_stddev(
            frequency_residuals(recs, fit.initial, reg, opt.frequency));
      fits.emplace(die, std::move(fit));
    }
    rep.rsd_die = frequency_rsd_die(fits, reg, opt.frequency);
    rep.rsd_die_mean = detail::mean_of_map(rep.rsd_die);
    rep.rsd_wafer = frequency_rsd_wafer(rep.kept_records, reg, opt.frequency);
    if (opt.dual_rsd) {
      rep.rsd_die_mean_unfiltered = detail::mean_of_map(rep.rsd_die_unfiltered);
      rep.rsd_wafer_unfiltered = frequency_rsd_wafer(abs.kept, reg, opt.frequency);
    }
  }
  rep.kept = rep.kept_records.size();
  rep.cv_wafer = conductance_cv(rep.kept_records, Scope::Wafer);
  rep.cv_die = conductance_cv(rep.kept_records, Scope::Die);
  rep.heatmap = normalized_heatmap(rep.kept_records, sites);
  if (!rep.kept_records.empty()) {
    rep.conductivity_designed = effective_conductivity(rep.kept_records, designed_areas());
    rep.conductivity_fit_designed = detail::try_radial_fit(rep.conductivity_designed);
    if (opt.model_conductivity) {
      rep.conductivity_model =
          effective_conductivity(rep.kept_records, model_areas(opt.geometry, opt.fidelity));
      rep.conductivity_fit_model = detail::try_radial_fit(rep.conductivity_model);
    }
  }
  return rep;
}

/// Analyze every variant present, Dolan first.
inline UniformityReport analyze_wafer(const std::vector<MeasurementRecord>& records,
                                      const std::vector<std::pair<GridSite, Variant>>& sites,
                                      const AnalysisOptions& opt) {
  UniformityReport out;
  for (Variant v : {Variant::Dolan, Variant::Manhattan}) {
    std::vector<MeasurementRecord> recs;
    for (const auto& r : records)
      if (r.design.variant == v && !r.excluded) recs.push_back(r);
    std::vector<GridSite> vs;
    for (const auto& [s, sv] : sites)
      if (sv == v) vs.push_back(s);
    if (recs.empty() && vs.empty()) continue;
    out.variants.push_back(analyze_variant(v, std::move(recs), std::move(vs), opt));
  }
  return out;
}

} // namespace analysis
} // namespace jju
