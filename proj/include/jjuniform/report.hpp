#pragma once

// Plain-text uniformity report and heatmap rasters.

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "analysis.hpp"
#include "csv_io.hpp"
#include "image.hpp"

namespace jju::report {

struct HeatmapScale {
  double low = 0.5;
  double high = 1.5;
  int cell_px = 8;
};

/// Grey level of a normalized cell: 0 is reserved for blanks, values map
/// linearly onto 1..255 after clamping to [low, high].
inline std::uint8_t heatmap_level(double v, const HeatmapScale& s) {
  const double t = (std::clamp(v, s.low, s.high) - s.low) / (s.high - s.low);
  return static_cast<std::uint8_t>(1 + std::lround(254.0 * t));
}

inline GrayImage heatmap_image(const analysis::HeatmapGrid& g, const HeatmapScale& s = {}) {
  if (s.cell_px < 1) throw DataError("heatmap cell size must be at least one pixel");
  if (!(s.low < s.high)) throw DataError("heatmap range is empty");
  const int w = static_cast<int>(std::max<std::size_t>(g.cols(), 1)) * s.cell_px;
  const int h = static_cast<int>(std::max<std::size_t>(g.rows(), 1)) * s.cell_px;
  GrayImage img(w, h, 1.0, 0);
  for (std::size_t r = 0; r < g.rows(); ++r)
    for (std::size_t c = 0; c < g.cols(); ++c) {
      const auto& cell = g.at(r, c);
      if (!cell) continue;
      const auto level = heatmap_level(*cell, s);
      for (int dy = 0; dy < s.cell_px; ++dy)
        for (int dx = 0; dx < s.cell_px; ++dx)
          img.at(static_cast<int>(c) * s.cell_px + dx, static_cast<int>(r) * s.cell_px + dy) = level;
    }
  return img;
}

namespace detail {

inline std::string opt(const std::optional<double>& v) { return v ? csv::num(*v) : "none"; }

inline void ids(std::ostream& os, const char* key, const std::vector<std::string>& v) {
  os << key << " =";
  for (const auto& id : v) os << ' ' << id;
  os << '\n';
}

inline void fit(std::ostream& os, const char* key, const std::optional<analysis::QuadraticFit>& f) {
  os << key << " = ";
  if (!f) {
    os << "none\n";
    return;
  }
  os << csv::num(f->a) << ' ' << csv::num(f->b) << ' ' << csv::num(f->c);
  const double c0 = (*f)(0.0);
  os << "  ratio_50mm " << (c0 != 0.0 ? csv::num((*f)(50.0) / c0) : std::string("none")) << '\n';
}

inline void cv_table(std::ostream& os, const std::vector<analysis::CvEntry>& entries) {
  os << "  die area_um2 n mean_uS std_uS cv\n";
  for (const auto& e : entries)
    os << "  " << (e.die ? to_string(*e.die) : std::string("wafer")) << ' ' << csv::num(e.area_um2) << ' '
       << e.count << ' ' << csv::num(e.mean_us) << ' ' << csv::num(e.stddev_us) << ' ' << opt(e.cv) << '\n';
}

} // namespace detail

inline void write_variant(std::ostream& os, const analysis::VariantReport& v) {
  os << "[" << to_string(v.variant) << "]\n";
  os << "uniform_design = " << (v.uniform_design ? "true" : "false") << '\n';
  os << "viable = " << v.total << '\n';
  os << "after_absolute = " << v.after_absolute << '\n';
  os << "kept = " << v.kept << '\n';
  os << "yield = " << csv::num(v.yield()) << '\n';
  detail::ids(os, "rejected_absolute", v.rejected_absolute);
  detail::ids(os, "rejected_relative", v.rejected_relative);
  os << "rsd_die_mean_mhz = " << detail::opt(v.rsd_die_mean) << '\n';
  os << "rsd_wafer_mhz = " << detail::opt(v.rsd_wafer) << '\n';
  if (!v.rsd_die_unfiltered.empty() || v.rsd_wafer_unfiltered) {
    os << "rsd_die_mean_unfiltered_mhz = " << detail::opt(v.rsd_die_mean_unfiltered) << '\n';
    os << "rsd_wafer_unfiltered_mhz = " << detail::opt(v.rsd_wafer_unfiltered) << '\n';
  }
  for (const auto& [die, rsd] : v.rsd_die) os << "rsd_die " << to_string(die) << " = " << csv::num(rsd) << '\n';
  detail::fit(os, "conductivity_fit_designed", v.conductivity_fit_designed);
  detail::fit(os, "conductivity_fit_model", v.conductivity_fit_model);
  os << "cv_wafer:\n";
  detail::cv_table(os, v.cv_wafer);
  os << "cv_die:\n";
  detail::cv_table(os, v.cv_die);
}

inline void write(std::ostream& os, const analysis::UniformityReport& rep) {
  for (std::size_t i = 0; i < rep.variants.size(); ++i) {
    if (i) os << '\n';
    write_variant(os, rep.variants[i]);
  }
}

} // namespace jju::report
