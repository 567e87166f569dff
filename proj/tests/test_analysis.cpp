#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "golden.hpp"
#include "jjuniform/analysis.hpp"
#include "jjuniform/layout.hpp"

using namespace jju;
using analysis::predicted_frequency;

namespace {

MeasurementRecord rec(std::string id, double g, double w = 200.0, int die_x = 0, int die_y = 0) {
  MeasurementRecord r;
  r.structure_id = std::move(id);
  r.g_us = g;
  r.die_x = die_x;
  r.die_y = die_y;
  r.design = {Variant::Manhattan, w, 160.0};
  r.a_overlap_designed_um2 = r.design.designed_area_um2();
  return r;
}

std::vector<MeasurementRecord> values(std::initializer_list<double> gs) {
  std::vector<MeasurementRecord> out;
  int i = 0;
  for (double g : gs) out.push_back(rec("r" + std::to_string(i++), g));
  return out;
}

std::set<std::string> ids_of(const std::vector<MeasurementRecord>& v) {
  std::set<std::string> s;
  for (const auto& r : v) s.insert(r.structure_id);
  return s;
}

ProcessModel ideal(Fidelity f = Fidelity::Full, bool shadowing = true) {
  ProcessModel p;
  p.fidelity = f;
  p.shadowing = shadowing;
  return p;
}

std::vector<MeasurementRecord> of_variant(std::vector<MeasurementRecord> r, Variant v) {
  std::erase_if(r, [&](const MeasurementRecord& m) { return m.design.variant != v; });
  return r;
}

std::vector<MeasurementRecord> synth_17q(const ProcessModel& p, const ParasiticsModel& par = ParasiticsModel::none()) {
  return synth::synthesize_wafer(layout::build_planar_17q(), GeometrySet{}, p, par);
}

} // namespace

TEST(AbsoluteFilter, Window) {
  const auto p = analysis::absolute_filter(values({10, 100, 600, 20, 500}), FilterConfig{});
  EXPECT_EQ(ids_of(p.rejected), (std::set<std::string>{"r0", "r2"}));
  EXPECT_EQ(ids_of(p.kept), (std::set<std::string>{"r1", "r3", "r4"}));
}

TEST(FilterConfig, Validation) {
  FilterConfig c;
  c.abs_low = 600;
  EXPECT_THROW(c.validate(), DataError);
  c = {};
  c.rel_threshold = 1.0;
  EXPECT_THROW(c.validate(), DataError);
  EXPECT_THROW(parse_regressor("slope"), DataError);
  EXPECT_EQ(parse_regressor("overlap_area"), Regressor::OverlapArea);
}

TEST(MeanFilter, Examples) {
  auto p = analysis::mean_filter(values({100, 100, 100, 60}), FilterConfig{});
  EXPECT_EQ(ids_of(p.rejected), (std::set<std::string>{"r3"}));
  p = analysis::mean_filter(values({80, 80, 80}), FilterConfig{});
  EXPECT_TRUE(p.rejected.empty());
  p = analysis::mean_filter(values({100, 71}), FilterConfig{});
  EXPECT_EQ(p.kept.size(), 2u);
  EXPECT_THROW(analysis::mean_filter({}, FilterConfig{}), DataError);
}

TEST(RegressionFilter, RejectsExactlyInjectedHalfOpens) {
  auto die = analysis::group_by_die(of_variant(synth_17q(ideal(Fidelity::Basic)), Variant::Manhattan)).begin()->second;
  const std::set<std::string> injected{die[3].structure_id, die[40].structure_id, die[200].structure_id};
  for (auto& r : die)
    if (injected.contains(r.structure_id)) r.g_us /= 2.0;
  const auto fit = analysis::regression_filter_die(die, FilterConfig{});
  EXPECT_EQ(std::set<std::string>(fit.rejected_ids.begin(), fit.rejected_ids.end()), injected);
  EXPECT_EQ(fit.kept_ids.size() + fit.rejected_ids.size(), die.size());
}

TEST(RegressionFilter, ExactLinearDataHasZeroResiduals) {
  auto die = analysis::group_by_die(of_variant(synth_17q(ideal(Fidelity::Full, false)), Variant::Dolan)).begin()->second;
  const auto fit = analysis::regression_filter_die(die, FilterConfig{});
  EXPECT_TRUE(fit.rejected_ids.empty());
  for (const auto& [id, r] : fit.residuals) EXPECT_NEAR(r, 0.0, 1e-10);
  // Dolan regresses on the top width: G = 2 sigma W_t 160 nm.
  EXPECT_NEAR(fit.line.slope, 2.0 * 1500.0 * 160.0 / 1e6, 1e-12);
  EXPECT_NEAR(fit.line.intercept, 0.0, 1e-9);
}

TEST(RegressionFilter, UnderdeterminedNamesDie) {
  std::vector<MeasurementRecord> flat{rec("a", 100), rec("b", 100), rec("c", 100)};
  try {
    analysis::regression_filter_die(flat, FilterConfig{}, "die (2,3)");
    FAIL() << "expected an error";
  } catch (const Underdetermined& e) {
    EXPECT_NE(std::string(e.what()).find("die (2,3)"), std::string::npos);
  }
}

TEST(RegressionFilter, OverlapAreaRegressorIsEquivalentForFixedElectrode) {
  auto die = analysis::group_by_die(of_variant(synth_17q(ideal(Fidelity::Basic)), Variant::Manhattan)).begin()->second;
  die[7].g_us *= 0.5;
  FilterConfig a, b;
  b.regressor = Regressor::OverlapArea;
  EXPECT_EQ(analysis::regression_filter_die(die, a).rejected_ids, analysis::regression_filter_die(die, b).rejected_ids);
}

TEST(RegressionFilter, IdempotentOnKeptSet) {
  ProcessModel p;
  p.lognormal_sigma = 0.03;
  p.p_open = 0.05;
  p.seed = 12;
  for (const auto& [die, recs] : analysis::group_by_die(of_variant(synth_17q(p, ParasiticsModel{}), Variant::Manhattan))) {
    const auto first = analysis::regression_filter_die(analysis::absolute_filter(recs, {}).kept, {});
    const auto again = analysis::regression_filter_die(first.kept, {});
    EXPECT_TRUE(again.rejected_ids.empty()) << to_string(die);
  }
  const auto abs = analysis::absolute_filter(synth_17q(p, ParasiticsModel{}), {});
  EXPECT_TRUE(analysis::absolute_filter(abs.kept, {}).rejected.empty());
  auto uniform = synth::synthesize_wafer(layout::build_35x35(LayoutKind::Planar35x35TiN), GeometrySet{}, p, {});
  const auto m = analysis::mean_filter(analysis::absolute_filter(uniform, {}).kept, {});
  EXPECT_FALSE(m.rejected.empty());
  EXPECT_TRUE(analysis::mean_filter(m.kept, {}).rejected.empty());
}

TEST(Frequency, Examples) {
  EXPECT_NEAR(predicted_frequency(100.0), golden::kFrequency100, 1e-9);
  EXPECT_NEAR(predicted_frequency(100.0), 5110.0, 0.1);
  EXPECT_EQ(predicted_frequency(0.0), -270.0);
  for (double g : {20.0, 73.0, 310.0})
    EXPECT_NEAR(predicted_frequency(4 * g) + 270.0, 2.0 * (predicted_frequency(g) + 270.0), 1e-9);
  EXPECT_THROW(predicted_frequency(-1.0), DataError);
}

TEST(Frequency, StrictlyIncreasingPreservesRank) {
  double prev = predicted_frequency(0.0);
  for (double g = 0.5; g < 600; g += 0.5) {
    const double f = predicted_frequency(g);
    EXPECT_GT(f, prev);
    prev = f;
  }
}

TEST(ConductanceCv, Examples) {
  auto cv = analysis::conductance_cv(values({100, 100}), analysis::Scope::Wafer);
  ASSERT_EQ(cv.size(), 1u);
  EXPECT_EQ(*cv[0].cv, 0.0);
  cv = analysis::conductance_cv(values({90, 110}), analysis::Scope::Wafer);
  EXPECT_DOUBLE_EQ(*cv[0].cv, 0.10);
  EXPECT_DOUBLE_EQ(cv[0].mean_us, 100.0);
  cv = analysis::conductance_cv(values({90}), analysis::Scope::Die);
  EXPECT_FALSE(cv[0].cv.has_value());
  ASSERT_TRUE(cv[0].die.has_value());
}

TEST(ConductanceCv, WaferSpreadExceedsDieSpreadUnderShadowing) {
  const auto recs = of_variant(synth_17q(ideal(Fidelity::Basic)), Variant::Manhattan);
  const auto wafer = analysis::conductance_cv(recs, analysis::Scope::Wafer);
  const auto die = analysis::conductance_cv(recs, analysis::Scope::Die);
  std::map<double, double> max_die;
  for (const auto& e : die)
    if (e.cv) max_die[e.area_um2] = std::max(max_die[e.area_um2], *e.cv);
  ASSERT_FALSE(wafer.empty());
  for (const auto& e : wafer) {
    ASSERT_TRUE(e.cv);
    EXPECT_GT(*e.cv, max_die.at(e.area_um2)) << e.area_um2;
  }
}

TEST(ConductanceCv, InvariantUnderGlobalScaling) {
  ProcessModel p;
  p.lognormal_sigma = 0.04;
  auto a = synth_17q(p);
  auto b = a;
  for (auto& r : b) r.g_us *= 3.7;
  const auto ca = analysis::conductance_cv(a, analysis::Scope::Die);
  const auto cb = analysis::conductance_cv(b, analysis::Scope::Die);
  ASSERT_EQ(ca.size(), cb.size());
  for (std::size_t i = 0; i < ca.size(); ++i)
    if (ca[i].cv) {
      EXPECT_NEAR(*ca[i].cv, *cb[i].cv, 1e-12);
    }
  const auto ha = analysis::normalized_heatmap(a, analysis::sites_of(a));
  const auto hb = analysis::normalized_heatmap(b, analysis::sites_of(b));
  for (std::size_t i = 0; i < ha.cells.size(); ++i)
    if (ha.cells[i]) {
      EXPECT_NEAR(*ha.cells[i], *hb.cells[i], 1e-12);
    }
}

TEST(FrequencyRsd, ZeroForExactData) {
  const auto recs = of_variant(synth_17q(ideal(Fidelity::Full, false)), Variant::Manhattan);
  std::map<DieKey, analysis::RegressionFit> fits;
  for (auto& [die, r] : analysis::group_by_die(recs)) fits.emplace(die, analysis::regression_filter_die(r, {}));
  for (const auto& [die, rsd] : analysis::frequency_rsd_die(fits, Regressor::VariableWidth, {}))
    EXPECT_NEAR(rsd, 0.0, 1e-9);
  EXPECT_NEAR(analysis::frequency_rsd_wafer(recs, Regressor::VariableWidth, {}), 0.0, 1e-9);
}

TEST(FrequencyRsd, GrowsWithDisorder) {
  double prev = 0.0;
  for (double s : {0.01, 0.02, 0.04}) {
    ProcessModel p;
    p.lognormal_sigma = s;
    p.seed = 21;
    const auto recs = of_variant(synth_17q(p), Variant::Manhattan);
    const double rsd = analysis::frequency_rsd_wafer(recs, Regressor::VariableWidth, {});
    EXPECT_GT(rsd, prev) << s;
    prev = rsd;
  }
}

TEST(FrequencyRsd, DieMeanBelowWaferWithSpatialVariation) {
  const auto recs = of_variant(synth_17q(ideal(Fidelity::Full)), Variant::Manhattan);
  analysis::AnalysisOptions opt;
  const auto rep = analysis::analyze_variant(Variant::Manhattan, recs, {}, opt);
  ASSERT_TRUE(rep.rsd_die_mean && rep.rsd_wafer);
  EXPECT_GT(*rep.rsd_wafer, 0.0);
  EXPECT_LE(*rep.rsd_die_mean, *rep.rsd_wafer);
}

TEST(FrequencyRsd, WaferFitRssBoundsPerDieSum) {
  ProcessModel p;
  p.lognormal_sigma = 0.03;
  p.p_open = 0.03;
  p.seed = 8;
  const auto rep = analysis::analyze_variant(Variant::Dolan, of_variant(synth_17q(p, {}), Variant::Dolan), {}, {});
  const auto& kept = rep.kept_records;
  const auto wafer_line = analysis::fit_records(kept, Regressor::VariableWidth, "wafer");
  const double wafer_rss = analysis::residual_sum_of_squares(kept, wafer_line, Regressor::VariableWidth);
  double die_sum = 0.0;
  for (const auto& [die, r] : analysis::group_by_die(kept)) {
    const auto line = analysis::fit_records(r, Regressor::VariableWidth, "die");
    die_sum += analysis::residual_sum_of_squares(r, line, Regressor::VariableWidth);
  }
  EXPECT_GE(wafer_rss, die_sum);
}

TEST(Heatmap, UniformNoiselessWaferIsAllOnes) {
  const auto recs = synth::synthesize_wafer(layout::build_35x35(LayoutKind::Planar35x35NbTiN), GeometrySet{},
                                            ideal(Fidelity::Full, false), ParasiticsModel::none());
  const auto h = analysis::normalized_heatmap(recs, analysis::sites_of(recs));
  EXPECT_EQ(h.rows(), 35u);
  EXPECT_EQ(h.cols(), 35u);
  for (const auto& c : h.cells) {
    ASSERT_TRUE(c);
    EXPECT_EQ(*c, 1.0);
  }
}

TEST(Heatmap, EdgeToCentreRatioFollowsArea) {
  CellGeometry cells;
  cells.array_pitch_mm = 50.0 / 17.0; // puts the outer column on x = 50 mm
  const auto l = layout::build_35x35(LayoutKind::Planar35x35NbTiN, {}, cells);
  const auto recs = synth::synthesize_wafer(l, GeometrySet{}, ideal(Fidelity::Basic), ParasiticsModel::none());
  const auto h = analysis::normalized_heatmap(recs, analysis::sites_of(recs));
  EXPECT_NEAR(h.xs.back(), 50.0, 1e-9);
  EXPECT_NEAR(*h.at(17, 34) / *h.at(17, 17), golden::kAreaRatioX50, 1e-9);
  EXPECT_NEAR(*h.at(17, 34) / *h.at(17, 17), 0.7163, 1e-3);
}

TEST(Heatmap, RejectedStructuresAreBlank) {
  const auto recs = synth::synthesize_wafer(layout::build_35x35(LayoutKind::Planar35x35TiN), GeometrySet{},
                                            ideal(Fidelity::Full, false), ParasiticsModel::none());
  auto kept = recs;
  kept.erase(kept.begin() + 100);
  const auto h = analysis::normalized_heatmap(kept, analysis::sites_of(recs));
  EXPECT_FALSE(h.value_of(recs[100].structure_id).has_value());
  EXPECT_TRUE(h.value_of(recs[101].structure_id).has_value());
  EXPECT_EQ(std::count(h.cells.begin(), h.cells.end(), std::nullopt), 1);
}

TEST(Heatmap, GridOrientation) {
  const auto recs = synth::synthesize_wafer(layout::build_35x35(LayoutKind::Planar35x35TiN), GeometrySet{},
                                            ProcessModel{}, ParasiticsModel::none());
  const auto h = analysis::normalized_heatmap(recs, analysis::sites_of(recs));
  EXPECT_DOUBLE_EQ(h.ys.front(), 34.0);
  EXPECT_DOUBLE_EQ(h.xs.front(), -34.0);
  EXPECT_EQ(h.ids[0], "T-r00-c00");
}

TEST(EffectiveConductivity, ActualAreasAreFlat) {
  const auto recs = synth::synthesize_wafer(layout::build_35x35(LayoutKind::Planar35x35NbTiN), GeometrySet{},
                                            ideal(Fidelity::Full), ParasiticsModel::none());
  const auto pts = analysis::effective_conductivity(recs, analysis::model_areas(GeometrySet{}, Fidelity::Full));
  for (const auto& p : pts) EXPECT_NEAR(p.conductivity, 1500.0, 1500.0 * 1e-12);
}

TEST(EffectiveConductivity, DesignedAreasDecreaseAlongAxes) {
  const auto recs = synth::synthesize_wafer(layout::build_35x35(LayoutKind::Planar35x35NbTiN), GeometrySet{},
                                            ideal(Fidelity::Basic), ParasiticsModel::none());
  const auto pts = analysis::effective_conductivity(recs, analysis::designed_areas());
  std::map<double, double> along_x, along_y;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (recs[i].position.y_mm == 0.0 && recs[i].position.x_mm >= 0.0) along_x[recs[i].position.x_mm] = pts[i].conductivity;
    if (recs[i].position.x_mm == 0.0 && recs[i].position.y_mm <= 0.0) along_y[-recs[i].position.y_mm] = pts[i].conductivity;
  }
  for (const auto* m : {&along_x, &along_y}) {
    ASSERT_EQ(m->size(), 18u);
    double prev = 1e300;
    for (const auto& [d, c] : *m) {
      EXPECT_LT(c, prev);
      prev = c;
    }
  }
  const auto fit = analysis::quadratic_radial_fit(pts);
  EXPECT_TRUE(fit.b < 0.0 || fit.c < 0.0);
  EXPECT_LE(fit(50.0) / fit(0.0), 0.75);
}

TEST(EffectiveConductivity, PadResistanceTrendPersistsWithActualAreas) {
  auto pads = ParasiticsModel::none();
  pads.pad_resistance_centre = 200.0;
  pads.pad_resistance_edge = 330.0;
  const auto recs = synth::synthesize_wafer(layout::build_35x35(LayoutKind::Planar35x35NbTiN), GeometrySet{},
                                            ideal(Fidelity::Full), pads);
  const auto pts = analysis::effective_conductivity(recs, analysis::model_areas(GeometrySet{}, Fidelity::Full));
  const auto fit = analysis::quadratic_radial_fit(pts);
  EXPECT_LT(fit(45.0), fit(0.0));
}

TEST(EffectiveConductivity, ZeroAreaRejected) {
  auto r = values({100});
  EXPECT_THROW(analysis::effective_conductivity(r, [](const MeasurementRecord&) { return 0.0; }), DataError);
  EXPECT_THROW(analysis::effective_conductivity(r, analysis::extracted_areas({})), DataError);
}

TEST(Deembed, InvertsParasitics) {
  const auto l = layout::build_35x35(LayoutKind::Planar35x35TiN);
  ParasiticsModel par;
  par.contact_resistance_enabled = true;
  par.contact_c1 = 0.4;
  const auto raw = synth::synthesize_wafer(l, GeometrySet{}, ProcessModel{}, par);
  const auto clean = synth::synthesize_wafer(l, GeometrySet{}, ProcessModel{}, ParasiticsModel::none());
  const auto fixed = analysis::deembed(raw, par);
  for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_NEAR(fixed[i].g_us, clean[i].g_us, 1e-9 * clean[i].g_us);
}

TEST(WidthOffsetFit, RecoversOffsetFromModelAreas) {
  EvaporatorGeometry g;
  g.dw_offset_nm = 31.0;
  const JunctionDesign d{Variant::Manhattan, 200.0, 200.0};
  std::vector<analysis::AreaSample> s;
  for (double x = -48; x <= 48; x += 6)
    for (double y = -48; y <= 48; y += 12)
      if (std::hypot(x, y) <= 50) s.push_back({{x, y}, shadow::actual_overlap_area(g, d, {x, y}, Fidelity::Basic)});
  EXPECT_NEAR(analysis::fit_width_offset(s, g, d), 31.0, 1e-6);
  EXPECT_THROW(analysis::fit_width_offset({}, g, d), DataError);
}

TEST(AnalyzeVariant, UniformDesignUsesMeanFilterAndNoRsd) {
  ProcessModel p;
  p.p_open = 0.02;
  p.lognormal_sigma = 0.02;
  const auto recs = synth::synthesize_wafer(layout::build_35x35(LayoutKind::Planar35x35NbTiN), GeometrySet{}, p, {});
  const auto rep = analysis::analyze_variant(Variant::Manhattan, recs, {}, {});
  EXPECT_TRUE(rep.uniform_design);
  EXPECT_FALSE(rep.rsd_wafer.has_value());
  EXPECT_EQ(rep.total, 1225u);
  EXPECT_LE(rep.yield(), 1.0);
  EXPECT_FALSE(rep.rejected_relative.empty());
  const auto idx = synth::truth_table(recs);
  EXPECT_EQ(std::set<std::string>(rep.rejected_relative.begin(), rep.rejected_relative.end()),
            std::set<std::string>(idx.open_half.begin(), idx.open_half.end()));
  EXPECT_TRUE(rep.conductivity_fit_model.has_value());
}

TEST(AnalyzeVariant, DualRsdReportsBothFlavours) {
  ProcessModel p;
  p.p_open = 0.04;
  p.lognormal_sigma = 0.02;
  analysis::AnalysisOptions opt;
  opt.dual_rsd = true;
  const auto l = layout::build_tsv_17q(Variant::Dolan, layout::reference_tsvs());
  const auto recs = synth::synthesize_wafer(l, GeometrySet{}, p, {});
  const auto rep = analysis::analyze_variant(Variant::Dolan, recs, {}, opt);
  ASSERT_TRUE(rep.rsd_wafer_unfiltered && rep.rsd_wafer);
  EXPECT_GT(*rep.rsd_wafer_unfiltered, *rep.rsd_wafer);
  EXPECT_EQ(rep.rsd_die_unfiltered.size(), 8u);
}

TEST(AnalyzeWafer, SplitsVariantsDolanFirst) {
  const auto recs = synth_17q(ProcessModel{}, ParasiticsModel{});
  std::vector<std::pair<analysis::GridSite, Variant>> sites;
  for (const auto& r : recs) sites.push_back({{r.structure_id, r.position}, r.design.variant});
  const auto rep = analysis::analyze_wafer(recs, sites, {});
  ASSERT_EQ(rep.variants.size(), 2u);
  EXPECT_EQ(rep.variants[0].variant, Variant::Dolan);
  EXPECT_EQ(rep.variants[1].total, 2176u);
  EXPECT_EQ(rep.variants[1].rsd_die.size(), 8u);
}
