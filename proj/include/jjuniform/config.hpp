#pragma once

// key = value run configuration. Keys are `block.name`; '#' starts a
// comment; unknown keys are rejected. `RunConfig{}` holds the defaults and
// `to_text()` writes them back out in loadable form.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "compensation.hpp"
#include "csv_io.hpp"
#include "errors.hpp"
#include "imaging.hpp"
#include "synth.hpp"

namespace jju {

struct ImagingConfig {
  int threshold_count = 11;
  double scale_nm = 2.0;
  int width_px = 640;
  int height_px = 640;
  double noise_sigma = 0.0;
  Fidelity fidelity = Fidelity::Basic;
};

struct RunConfig {
  GeometrySet geometry;
  ProcessModel process;
  ParasiticsModel parasitics;
  FilterConfig filter;
  FrequencyModel frequency;
  bool dual_rsd = false;
  bool deembed = false;
  bool model_conductivity = true;
  double heatmap_low = 0.5;
  double heatmap_high = 1.5;
  ImagingConfig imaging;
  CompensationLimits compensation;
  Fidelity compensation_fidelity = Fidelity::Basic;
  CompensationMode compensation_mode = CompensationMode::Aspect;
  std::string tsv_path;
  std::string sites_path;
  std::string sweeps_path;

  analysis::AnalysisOptions analysis_options() const {
    analysis::AnalysisOptions o;
    o.filter = filter;
    o.frequency = frequency;
    o.dual_rsd = dual_rsd;
    o.deembed = deembed;
    o.deembed_parasitics = parasitics;
    o.model_conductivity = model_conductivity;
    o.geometry = geometry;
    o.fidelity = process.fidelity;
    return o;
  }

  void validate() const {
    geometry.manhattan.validate();
    geometry.dolan.validate();
    process.validate();
    parasitics.validate();
    filter.validate();
    frequency.validate();
    if (!(heatmap_low < heatmap_high)) throw DataError("analysis.heatmap_low must be below heatmap_high");
    if (imaging.threshold_count < 1) throw DataError("imaging.threshold_count must be at least 1");
    if (!(compensation.min_width_nm > 0.0 && compensation.min_width_nm < compensation.max_width_nm))
      throw DataError("compensation requires 0 < min_width_nm < max_width_nm");
  }
};

namespace config {

namespace detail {

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw DataError("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw DataError("config: '" + key + "' expects true/false, got '" + v + "'");
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class Get>
Field num_field(const std::string& key, Get get) {
  return {[key, get](RunConfig& c, const std::string& v) { get(c) = parse_double(key, v); },
          [get](const RunConfig& c) { return csv::num(get(const_cast<RunConfig&>(c))); }};
}

template <class Get>
Field int_field(const std::string& key, Get get) {
  return {[key, get](RunConfig& c, const std::string& v) {
            std::remove_reference_t<decltype(get(c))> n{};
            const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
            if (ec != std::errc{} || end != v.data() + v.size())
              throw DataError("config: '" + key + "' expects an integer in range, got '" + v + "'");
            get(c) = n;
          },
          [get](const RunConfig& c) { return std::to_string(get(const_cast<RunConfig&>(c))); }};
}

template <class Get>
Field bool_field(const std::string& key, Get get) {
  return {[key, get](RunConfig& c, const std::string& v) { get(c) = parse_bool(key, v); },
          [get](const RunConfig& c) { return std::string(get(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
}

template <class Get>
Field str_field(Get get) {
  return {[get](RunConfig& c, const std::string& v) { get(c) = v; },
          [get](const RunConfig& c) { return get(const_cast<RunConfig&>(c)); }};
}

template <class Get>
Field fidelity_field(Get get) {
  return {[get](RunConfig& c, const std::string& v) { get(c) = parse_fidelity(v); },
          [get](const RunConfig& c) { return std::string(to_string(get(const_cast<RunConfig&>(c)))); }};
}

// Ordered table of every key.
inline const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    auto add = [&](std::string k, Field f) { t.emplace_back(std::move(k), std::move(f)); };
    // Both variants share the evaporator; only the tilt differs.
    add("geometry.d_prime_mm", {[](RunConfig& c, const std::string& v) {
          c.geometry.manhattan.d_prime_mm = c.geometry.dolan.d_prime_mm = parse_double("geometry.d_prime_mm", v); },
        [](const RunConfig& c) { return csv::num(c.geometry.manhattan.d_prime_mm); }});
    add("geometry.r_pivot_mm", {[](RunConfig& c, const std::string& v) {
          c.geometry.manhattan.r_pivot_mm = c.geometry.dolan.r_pivot_mm = parse_double("geometry.r_pivot_mm", v); },
        [](const RunConfig& c) { return csv::num(c.geometry.manhattan.r_pivot_mm); }});
    add("geometry.alpha_deg", num_field("geometry.alpha_deg", [](RunConfig& c) -> double& { return c.geometry.manhattan.alpha_deg; }));
    add("geometry.alpha_dolan_deg", num_field("geometry.alpha_dolan_deg", [](RunConfig& c) -> double& { return c.geometry.dolan.alpha_deg; }));
    add("geometry.h_resist_nm", {[](RunConfig& c, const std::string& v) {
          c.geometry.manhattan.h_resist_nm = c.geometry.dolan.h_resist_nm = parse_double("geometry.h_resist_nm", v); },
        [](const RunConfig& c) { return csv::num(c.geometry.manhattan.h_resist_nm); }});
    add("geometry.t_bottom_nm", {[](RunConfig& c, const std::string& v) {
          c.geometry.manhattan.t_bottom_nm = c.geometry.dolan.t_bottom_nm = parse_double("geometry.t_bottom_nm", v); },
        [](const RunConfig& c) { return csv::num(c.geometry.manhattan.t_bottom_nm); }});
    add("geometry.dw_offset_nm", {[](RunConfig& c, const std::string& v) {
          c.geometry.manhattan.dw_offset_nm = c.geometry.dolan.dw_offset_nm = parse_double("geometry.dw_offset_nm", v); },
        [](const RunConfig& c) { return csv::num(c.geometry.manhattan.dw_offset_nm); }});

    add("process.sigma_j", num_field("process.sigma_j", [](RunConfig& c) -> double& { return c.process.sigma_j; }));
    add("process.lognormal_sigma", num_field("process.lognormal_sigma", [](RunConfig& c) -> double& { return c.process.lognormal_sigma; }));
    add("process.p_open", num_field("process.p_open", [](RunConfig& c) -> double& { return c.process.p_open; }));
    add("process.p_open_full", num_field("process.p_open_full", [](RunConfig& c) -> double& { return c.process.p_open_full; }));
    add("process.p_short", num_field("process.p_short", [](RunConfig& c) -> double& { return c.process.p_short; }));
    add("process.fidelity", fidelity_field([](RunConfig& c) -> Fidelity& { return c.process.fidelity; }));
    add("process.shadowing", bool_field("process.shadowing", [](RunConfig& c) -> bool& { return c.process.shadowing; }));
    add("process.seed", int_field("process.seed", [](RunConfig& c) -> std::uint64_t& { return c.process.seed; }));

    add("parasitics.pad_resistance_centre", num_field("parasitics.pad_resistance_centre", [](RunConfig& c) -> double& { return c.parasitics.pad_resistance_centre; }));
    add("parasitics.pad_resistance_edge", num_field("parasitics.pad_resistance_edge", [](RunConfig& c) -> double& { return c.parasitics.pad_resistance_edge; }));
    add("parasitics.edge_radius_mm", num_field("parasitics.edge_radius_mm", [](RunConfig& c) -> double& { return c.parasitics.edge_radius_mm; }));
    add("parasitics.substrate_parallel", num_field("parasitics.substrate_parallel", [](RunConfig& c) -> double& { return c.parasitics.substrate_parallel; }));
    add("parasitics.cabling_series", num_field("parasitics.cabling_series", [](RunConfig& c) -> double& { return c.parasitics.cabling_series; }));
    add("parasitics.contact_resistance_enabled", bool_field("parasitics.contact_resistance_enabled", [](RunConfig& c) -> bool& { return c.parasitics.contact_resistance_enabled; }));
    add("parasitics.contact_c0", num_field("parasitics.contact_c0", [](RunConfig& c) -> double& { return c.parasitics.contact_c0; }));
    add("parasitics.contact_c1", num_field("parasitics.contact_c1", [](RunConfig& c) -> double& { return c.parasitics.contact_c1; }));
    add("parasitics.contact_c2", num_field("parasitics.contact_c2", [](RunConfig& c) -> double& { return c.parasitics.contact_c2; }));

    add("filter.abs_low", num_field("filter.abs_low", [](RunConfig& c) -> double& { return c.filter.abs_low; }));
    add("filter.abs_high", num_field("filter.abs_high", [](RunConfig& c) -> double& { return c.filter.abs_high; }));
    add("filter.rel_threshold", num_field("filter.rel_threshold", [](RunConfig& c) -> double& { return c.filter.rel_threshold; }));
    add("filter.regressor", {[](RunConfig& c, const std::string& v) { c.filter.regressor = parse_regressor(v); },
                             [](const RunConfig& c) { return std::string(to_string(c.filter.regressor)); }});

    add("frequency.f_c_mhz", num_field("frequency.f_c_mhz", [](RunConfig& c) -> double& { return c.frequency.f_c_mhz; }));
    add("frequency.m_ghz_per_ms", num_field("frequency.m_ghz_per_ms", [](RunConfig& c) -> double& { return c.frequency.m_ghz_per_ms; }));

    add("analysis.dual_rsd", bool_field("analysis.dual_rsd", [](RunConfig& c) -> bool& { return c.dual_rsd; }));
    add("analysis.deembed", bool_field("analysis.deembed", [](RunConfig& c) -> bool& { return c.deembed; }));
    add("analysis.model_conductivity", bool_field("analysis.model_conductivity", [](RunConfig& c) -> bool& { return c.model_conductivity; }));
    add("analysis.heatmap_low", num_field("analysis.heatmap_low", [](RunConfig& c) -> double& { return c.heatmap_low; }));
    add("analysis.heatmap_high", num_field("analysis.heatmap_high", [](RunConfig& c) -> double& { return c.heatmap_high; }));

    add("imaging.threshold_count", int_field("imaging.threshold_count", [](RunConfig& c) -> int& { return c.imaging.threshold_count; }));
    add("imaging.scale_nm", num_field("imaging.scale_nm", [](RunConfig& c) -> double& { return c.imaging.scale_nm; }));
    add("imaging.width_px", int_field("imaging.width_px", [](RunConfig& c) -> int& { return c.imaging.width_px; }));
    add("imaging.height_px", int_field("imaging.height_px", [](RunConfig& c) -> int& { return c.imaging.height_px; }));
    add("imaging.noise_sigma", num_field("imaging.noise_sigma", [](RunConfig& c) -> double& { return c.imaging.noise_sigma; }));
    add("imaging.fidelity", fidelity_field([](RunConfig& c) -> Fidelity& { return c.imaging.fidelity; }));

    add("compensation.min_width_nm", num_field("compensation.min_width_nm", [](RunConfig& c) -> double& { return c.compensation.min_width_nm; }));
    add("compensation.max_width_nm", num_field("compensation.max_width_nm", [](RunConfig& c) -> double& { return c.compensation.max_width_nm; }));
    add("compensation.fidelity", fidelity_field([](RunConfig& c) -> Fidelity& { return c.compensation_fidelity; }));
    add("compensation.mode", {[](RunConfig& c, const std::string& v) { c.compensation_mode = compensation::parse_mode(v); },
                              [](const RunConfig& c) { return compensation::to_string(c.compensation_mode); }});

    add("paths.tsv", str_field([](RunConfig& c) -> std::string& { return c.tsv_path; }));
    add("paths.sites", str_field([](RunConfig& c) -> std::string& { return c.sites_path; }));
    add("paths.sweeps", str_field([](RunConfig& c) -> std::string& { return c.sweeps_path; }));
    return t;
  }();
  return table;
}

} // namespace detail

inline void apply(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& [k, f] : detail::fields())
    if (k == key) {
      f.set(cfg, value);
      return;
    }
  throw DataError("config: unknown key '" + key + "'");
}

inline RunConfig parse(std::istream& is, RunConfig cfg = {}) {
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError("config:" + std::to_string(n) + ": expected key = value");
    apply(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

inline RunConfig load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open config '" + path + "'");
  return parse(is);
}

inline std::string to_text(const RunConfig& cfg) {
  std::ostringstream os;
  std::string block;
  for (const auto& [k, f] : detail::fields()) {
    const std::string b = k.substr(0, k.find('.'));
    if (b != block) {
      if (!block.empty()) os << '\n';
      os << "# " << b << '\n';
      block = b;
    }
    os << k << " = " << f.get(cfg) << '\n';
  }
  return os.str();
}

} // namespace config
} // namespace jju
