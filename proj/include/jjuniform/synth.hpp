#pragma once

// Synthetic room-temperature conductance of a wafer: junction areas from the
// shadow model, multiplicative lognormal disorder, injected defects, and the
// series/parallel parasitics of a two-point measurement.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "layout.hpp"
#include "shadow_model.hpp"

namespace jju {

enum class DefectClass { None, OpenHalf, OpenFull, Short };

inline std::string_view to_string(DefectClass d) {
  switch (d) {
  case DefectClass::None: return "none";
  case DefectClass::OpenHalf: return "open_half";
  case DefectClass::OpenFull: return "open_full";
  case DefectClass::Short: return "short";
  }
  return "?";
}

inline DefectClass parse_defect_class(std::string_view s) {
  for (auto d : {DefectClass::None, DefectClass::OpenHalf, DefectClass::OpenFull, DefectClass::Short})
    if (to_string(d) == s) return d;
  throw DataError("unknown defect class '" + std::string(s) + "'");
}

/// Geometry per junction variant; the two processes use different tilts.
struct GeometrySet {
  EvaporatorGeometry manhattan = EvaporatorGeometry::manhattan();
  EvaporatorGeometry dolan = EvaporatorGeometry::dolan();

  GeometrySet() = default;
  GeometrySet(const EvaporatorGeometry& m, const EvaporatorGeometry& d) : manhattan(m), dolan(d) {}
  // Same geometry for both variants.
  GeometrySet(const EvaporatorGeometry& both) : manhattan(both), dolan(both) {} // NOLINT

  const EvaporatorGeometry& for_variant(Variant v) const {
    return v == Variant::Dolan ? dolan : manhattan;
  }
};

struct ProcessModel {
  double sigma_j = 1500.0;        // uS/um^2, G of one junction = sigma_j * A'
  double lognormal_sigma = 0.0;   // per-junction multiplicative disorder
  double p_open = 0.0;            // per structure: exactly one junction open
  double p_open_full = 0.0;       // per structure: every junction open
  double p_short = 0.0;           // per structure: shorted pair
  Fidelity fidelity = Fidelity::Full; // Dolan structures always use Basic
  bool shadowing = true;          // false: actual area = designed area
  std::uint64_t seed = 1;

  void validate() const {
    if (!(sigma_j > 0.0)) throw DataError("process.sigma_j must be positive");
    if (!(lognormal_sigma >= 0.0)) throw DataError("process.lognormal_sigma must be non-negative");
    for (double p : {p_open, p_open_full, p_short})
      if (!(p >= 0.0 && p <= 1.0)) throw DataError("defect probabilities must lie in [0, 1]");
    if (p_open + p_open_full + p_short > 1.0)
      throw DataError("defect probabilities sum to more than 1");
  }
};

struct ParasiticsModel {
  double pad_resistance_centre = 200.0; // ohm
  double pad_resistance_edge = 330.0;   // ohm, reached at edge_radius_mm
  double edge_radius_mm = 50.0;
  double substrate_parallel = 5.0;      // uS
  double cabling_series = 5.0;          // ohm
  bool contact_resistance_enabled = false;
  // Contact series resistance c0 + c1 d + c2 d^2 (ohm, d in mm).
  double contact_c0 = 0.0;
  double contact_c1 = 0.0;
  double contact_c2 = 0.0;

  static ParasiticsModel none() {
    ParasiticsModel p;
    p.pad_resistance_centre = p.pad_resistance_edge = 0.0;
    p.substrate_parallel = 0.0;
    p.cabling_series = 0.0;
    return p;
  }

  void validate() const {
    if (!(edge_radius_mm > 0.0)) throw DataError("parasitics.edge_radius_mm must be positive");
    if (pad_resistance_centre < 0.0 || pad_resistance_edge < 0.0 || cabling_series < 0.0 ||
        substrate_parallel < 0.0)
      throw DataError("parasitic resistances and conductances must be non-negative");
  }

  double pad_resistance(double d_mm) const {
    return pad_resistance_centre +
           (pad_resistance_edge - pad_resistance_centre) * d_mm / edge_radius_mm;
  }

  double contact_resistance(double d_mm) const {
    if (!contact_resistance_enabled) return 0.0;
    return contact_c0 + contact_c1 * d_mm + contact_c2 * d_mm * d_mm;
  }

  /// Total series resistance seen by the junction pair at radius d.
  double series_resistance(double d_mm) const {
    return pad_resistance(d_mm) + cabling_series + contact_resistance(d_mm);
  }

  /// Two-point reading of a pair with intrinsic conductance g_pair (uS).
  double measured(double g_pair_us, double d_mm) const {
    const double r_ohm = series_resistance(d_mm);
    double g = 0.0;
    if (g_pair_us > 0.0) g = 1.0 / (1.0 / g_pair_us + r_ohm * 1e-6);
    return g + substrate_parallel;
  }
};

struct MeasurementRecord {
  std::string structure_id;
  int die_x = 0;
  int die_y = 0;
  WaferPoint position;
  JunctionDesign design;
  double a_overlap_designed_um2 = 0.0;
  int junction_count = 2;
  bool excluded = false;
  double g_us = 0.0;
  std::optional<DefectClass> truth; // synthetic data only
};

/// Conductance of a shorted pair before parasitics (1 ohm).
inline constexpr double kShortConductanceUs = 1.0e6;

namespace synth {

/// Per-junction area used by the synthesizer.
inline double junction_area(const GeometrySet& geom, const ProcessModel& process,
                            const TestStructure& s) {
  if (!process.shadowing) return s.a_overlap_designed_um2;
  const Fidelity f = s.design.variant == Variant::Dolan ? Fidelity::Basic : process.fidelity;
  return shadow::actual_overlap_area(geom.for_variant(s.design.variant), s.design, s.position, f);
}

/// One record per viable structure, in layout order. Disorder and defects
/// come from separate random streams, so changing defect rates leaves the
/// disorder of every structure untouched.
inline std::vector<MeasurementRecord> synthesize_wafer(const WaferLayout& layout,
                                                       const GeometrySet& geom,
                                                       const ProcessModel& process,
                                                       const ParasiticsModel& parasitics) {
  process.validate();
  parasitics.validate();
  std::seed_seq disorder_seq{process.seed, std::uint64_t{0x6a09e667f3bcc908ULL}};
  std::seed_seq defect_seq{process.seed, std::uint64_t{0xbb67ae8584caa73bULL}};
  std::mt19937_64 disorder_rng(disorder_seq);
  std::mt19937_64 defect_rng(defect_seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  std::vector<MeasurementRecord> out;
  out.reserve(layout.structures.size());
  for (const auto& s : layout.structures) {
    if (s.excluded) continue;
    const double g_unit = process.sigma_j * junction_area(geom, process, s);

    std::array<double, 2> g_j{};
    for (auto& g : g_j) g = g_unit * std::exp(process.lognormal_sigma * normal(disorder_rng));

    const double u_class = uniform(defect_rng);
    const double u_which = uniform(defect_rng);
    DefectClass defect = DefectClass::None;
    if (u_class < process.p_short)
      defect = DefectClass::Short;
    else if (u_class < process.p_short + process.p_open)
      defect = s.junction_count > 1 ? DefectClass::OpenHalf : DefectClass::OpenFull;
    else if (u_class < process.p_short + process.p_open + process.p_open_full)
      defect = DefectClass::OpenFull;

    const int open_junction = defect == DefectClass::OpenHalf ? (u_which < 0.5 ? 0 : 1) : -1;
    double g_pair = 0.0;
    for (int j = 0; j < s.junction_count && j < 2; ++j)
      if (j != open_junction) g_pair += g_j[j];
    if (defect == DefectClass::OpenFull) g_pair = 0.0;
    if (defect == DefectClass::Short) g_pair = kShortConductanceUs;

    MeasurementRecord r;
    r.structure_id = s.id;
    r.die_x = s.die_x;
    r.die_y = s.die_y;
    r.position = s.position;
    r.design = s.design;
    r.a_overlap_designed_um2 = s.a_overlap_designed_um2;
    r.junction_count = s.junction_count;
    r.g_us = parasitics.measured(g_pair, s.position.radius_mm());
    r.truth = defect;
    out.push_back(std::move(r));
  }
  return out;
}

struct DefectIndex {
  std::vector<std::string> open_half;
  std::vector<std::string> open_full;
  std::vector<std::string> shorted;
};

inline DefectIndex truth_table(const std::vector<MeasurementRecord>& records) {
  DefectIndex idx;
  for (const auto& r : records) {
    if (!r.truth) throw DataError("record '" + r.structure_id + "' carries no truth flags");
    switch (*r.truth) {
    case DefectClass::None: break;
    case DefectClass::OpenHalf: idx.open_half.push_back(r.structure_id); break;
    case DefectClass::OpenFull: idx.open_full.push_back(r.structure_id); break;
    case DefectClass::Short: idx.shorted.push_back(r.structure_id); break;
    }
  }
  return idx;
}

} // namespace synth
} // namespace jju
