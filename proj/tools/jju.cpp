// jju: layouts, synthetic measurements, uniformity analysis, model field
// maps, micrograph rendering/extraction and pre-compensation.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "jjuniform.hpp"

namespace fs = std::filesystem;
using namespace jju;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;

  RunConfig load() const {
    RunConfig cfg = config_path.empty() ? RunConfig{} : config::load(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw DataError("--set expects key=value, got '" + kv + "'");
      config::apply(cfg, config::detail::trim(kv.substr(0, eq)), config::detail::trim(kv.substr(eq + 1)));
    }
    cfg.validate();
    return cfg;
  }
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("-c,--config", c.config_path, "key = value configuration file");
  sub->add_option("--set", c.overrides, "override one configuration key (key=value)");
}

// Writes to `path`, or standard output for "-".
template <class F>
void emit(const std::string& path, F write) {
  if (path == "-") {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write '" + path + "'");
  write(os);
  if (!os) throw DataError("write failed for '" + path + "'");
}

template <class T, class F>
T read_file(const std::string& path, F read) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open '" + path + "'");
  return read(is);
}

// Runs body(i) for i in [0, n) on all hardware threads; the first error wins.
template <class F>
void parallel_for(std::size_t n, F body) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

WaferLayout build_layout(LayoutKind kind, const RunConfig& cfg, bool al_omission) {
  const SweepTable sweeps =
      cfg.sweeps_path.empty() ? SweepTable::reference() : read_file<SweepTable>(cfg.sweeps_path, [](auto& is) { return csv::read_sweeps(is); });
  const auto sites = cfg.sites_path.empty() ? layout::reference_sites()
                                            : read_file<std::vector<SubarraySite>>(cfg.sites_path, [](auto& is) { return csv::read_sites(is); });
  const auto tsvs = cfg.tsv_path.empty() ? layout::reference_tsvs()
                                         : read_file<std::vector<Tsv>>(cfg.tsv_path, [](auto& is) { return csv::read_tsvs(is); });
  switch (kind) {
  case LayoutKind::Planar17Q: return layout::build_planar_17q(sweeps, sites);
  case LayoutKind::Tsv17QDolan: return layout::build_tsv_17q(Variant::Dolan, tsvs, sweeps, sites);
  case LayoutKind::Tsv17QManhattan: return layout::build_tsv_17q(Variant::Manhattan, tsvs, sweeps, sites);
  default: return layout::build_reference(kind, al_omission);
  }
}

WaferLayout load_layout(const std::string& path) {
  return read_file<WaferLayout>(path, [&](auto& is) { return csv::read_layout(is, path); });
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wafer-scale Josephson junction uniformity toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "jju 1.0");

  // layout
  Common layout_c;
  std::string kind_name, layout_out = "-";
  bool no_omission = false;
  auto* layout_cmd = app.add_subcommand("layout", "emit a test-structure layout");
  add_common(layout_cmd, layout_c);
  layout_cmd->add_option("-k,--kind", kind_name, "layout kind")
      ->required()
      ->check(CLI::IsMember({"planar17q", "tsv17q-dolan", "tsv17q-manhattan", "planar35x35-nbtin", "planar35x35-tin",
                             "planar35x35-al"}));
  std::string tsv_path, sites_path, sweeps_path;
  layout_cmd->add_option("--tsv", tsv_path, "TSV positions CSV")->check(CLI::ExistingFile);
  layout_cmd->add_option("--sites", sites_path, "sub-array sites CSV")->check(CLI::ExistingFile);
  layout_cmd->add_option("--sweeps", sweeps_path, "width sweeps CSV")->check(CLI::ExistingFile);
  layout_cmd->add_flag("--no-omission", no_omission, "keep every Al row viable");
  layout_cmd->add_option("-o,--out", layout_out, "output CSV (- for stdout)");

  // simulate
  Common sim_c;
  std::string sim_layout, sim_out = "-", sim_truth;
  std::optional<std::uint64_t> sim_seed;
  auto* sim_cmd = app.add_subcommand("simulate", "synthesize conductance measurements");
  add_common(sim_cmd, sim_c);
  sim_cmd->add_option("-l,--layout", sim_layout, "layout CSV")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--seed", sim_seed, "random seed (overrides process.seed)");
  sim_cmd->add_option("-o,--out", sim_out, "measurement CSV (- for stdout)");
  sim_cmd->add_option("--truth", sim_truth, "defect truth table CSV");

  // analyze
  Common an_c;
  std::string an_meas, an_layout, an_dir;
  auto* an_cmd = app.add_subcommand("analyze", "filter, fit and report uniformity");
  add_common(an_cmd, an_c);
  an_cmd->add_option("-m,--measurements", an_meas, "measurement CSV")->required()->check(CLI::ExistingFile);
  an_cmd->add_option("-l,--layout", an_layout, "layout CSV listing every site")->check(CLI::ExistingFile);
  an_cmd->add_option("-d,--out-dir", an_dir, "output directory")->required();

  // fieldmap
  Common fm_c;
  std::string fm_quantity = "area", fm_out = "-", fm_fidelity = "basic", fm_variant = "manhattan";
  std::optional<double> fm_step;
  std::optional<int> fm_points;
  double fm_extent = 50.0, fm_wb = 200.0, fm_wt = 200.0;
  auto* fm_cmd = app.add_subcommand("fieldmap", "model quantity over the wafer");
  add_common(fm_cmd, fm_c);
  fm_cmd->add_option("-q,--quantity", fm_quantity, "model quantity")
      ->check(CLI::IsMember({"wb", "wt", "tb", "wlip", "hlip", "wt_full", "area"}));
  auto* step_opt = fm_cmd->add_option("--step", fm_step, "grid spacing in mm");
  fm_cmd->add_option("--points", fm_points, "grid points per axis")->excludes(step_opt);
  fm_cmd->add_option("--extent", fm_extent, "half width of the grid in mm");
  fm_cmd->add_option("--fidelity", fm_fidelity, "area fidelity")->check(CLI::IsMember({"basic", "sidewall", "full"}));
  fm_cmd->add_option("--variant", fm_variant, "junction variant")->check(CLI::IsMember({"manhattan", "dolan"}));
  fm_cmd->add_option("--wb", fm_wb, "designed bottom width in nm");
  fm_cmd->add_option("--wt", fm_wt, "designed top width in nm");
  fm_cmd->add_option("-o,--out", fm_out, "output CSV (- for stdout)");

  // render
  Common rd_c;
  std::string rd_out, rd_layout, rd_dir;
  std::optional<double> rd_x, rd_y, rd_noise, rd_scale;
  std::uint64_t rd_seed = 1;
  double rd_wb = 200.0, rd_wt = 200.0;
  auto* rd_cmd = app.add_subcommand("render", "render junction micrographs to PGM");
  add_common(rd_cmd, rd_c);
  rd_cmd->add_option("-x", rd_x, "wafer x in mm (single image)");
  rd_cmd->add_option("-y", rd_y, "wafer y in mm (single image)");
  rd_cmd->add_option("--wb", rd_wb, "designed bottom width in nm (single image)");
  rd_cmd->add_option("--wt", rd_wt, "designed top width in nm (single image)");
  rd_cmd->add_option("-o,--out", rd_out, "output PGM (single image)");
  rd_cmd->add_option("-l,--layout", rd_layout, "render every viable structure of a layout")->check(CLI::ExistingFile);
  rd_cmd->add_option("-d,--out-dir", rd_dir, "output directory for a layout batch");
  rd_cmd->add_option("--seed", rd_seed, "noise seed; batch image i uses seed + i");
  rd_cmd->add_option("--noise", rd_noise, "noise sigma as a fraction of full scale");
  rd_cmd->add_option("--scale", rd_scale, "nm per pixel");

  // extract
  Common ex_c;
  std::vector<std::string> ex_images;
  std::optional<double> ex_scale;
  std::string ex_out = "-";
  auto* ex_cmd = app.add_subcommand("extract", "extract widths and overlap area from PGM images");
  add_common(ex_cmd, ex_c);
  ex_cmd->add_option("images", ex_images, "PGM images")->required()->check(CLI::ExistingFile);
  ex_cmd->add_option("--scale", ex_scale, "nm per pixel (overrides the image header)");
  ex_cmd->add_option("-o,--out", ex_out, "extraction CSV (- for stdout)");

  // compensate
  Common cp_c;
  std::string cp_layout, cp_out = "-";
  auto* cp_cmd = app.add_subcommand("compensate", "pre-compensate designed widths");
  add_common(cp_cmd, cp_c);
  cp_cmd->add_option("-l,--layout", cp_layout, "layout CSV")->required()->check(CLI::ExistingFile);
  cp_cmd->add_option("-o,--out", cp_out, "compensated layout CSV (- for stdout)");

  // reference
  std::string ref_dir;
  auto* ref_cmd = app.add_subcommand("reference", "write the default config and bundled reference tables");
  ref_cmd->add_option("-d,--out-dir", ref_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*layout_cmd) {
      RunConfig cfg = layout_c.load();
      if (!tsv_path.empty()) cfg.tsv_path = tsv_path;
      if (!sites_path.empty()) cfg.sites_path = sites_path;
      if (!sweeps_path.empty()) cfg.sweeps_path = sweeps_path;
      const auto l = build_layout(parse_layout_kind(kind_name), cfg, !no_omission);
      emit(layout_out, [&](std::ostream& os) { csv::write_layout(os, l); });
    } else if (*sim_cmd) {
      RunConfig cfg = sim_c.load();
      if (sim_seed) cfg.process.seed = *sim_seed;
      const auto recs = synth::synthesize_wafer(load_layout(sim_layout), cfg.geometry, cfg.process, cfg.parasitics);
      emit(sim_out, [&](std::ostream& os) { csv::write_measurements(os, recs); });
      if (!sim_truth.empty()) emit(sim_truth, [&](std::ostream& os) { csv::write_truth(os, recs); });
    } else if (*an_cmd) {
      const RunConfig cfg = an_c.load();
      const auto recs = read_file<std::vector<MeasurementRecord>>(
          an_meas, [&](auto& is) { return csv::read_measurements(is, an_meas); });
      std::vector<std::pair<analysis::GridSite, Variant>> sites;
      if (!an_layout.empty())
        for (const auto& s : load_layout(an_layout).structures)
          if (!s.excluded) sites.push_back({{s.id, s.position}, s.design.variant});
      const auto rep = analysis::analyze_wafer(recs, sites, cfg.analysis_options());
      fs::create_directories(an_dir);
      const fs::path dir(an_dir);
      emit((dir / "report.txt").string(), [&](std::ostream& os) { report::write(os, rep); });
      emit((dir / "heatmap.csv").string(), [&](std::ostream& os) {
        os << csv::kHeatmapHeader << '\n';
        for (const auto& v : rep.variants) csv::write_heatmap(os, v.variant, v.heatmap, false);
      });
      const report::HeatmapScale scale{cfg.heatmap_low, cfg.heatmap_high};
      for (const auto& v : rep.variants) {
        if (v.heatmap.cells.empty()) continue;
        pgm::write_file((dir / ("heatmap_" + std::string(to_string(v.variant)) + ".pgm")).string(),
                        report::heatmap_image(v.heatmap, scale));
      }
    } else if (*fm_cmd) {
      const RunConfig cfg = fm_c.load();
      FieldSpec spec;
      spec.quantity = parse_field_quantity(fm_quantity);
      spec.extent_mm = fm_extent;
      spec.points = fm_step ? FieldSpec::points_for_step(*fm_step, fm_extent) : fm_points.value_or(35);
      spec.fidelity = parse_fidelity(fm_fidelity);
      spec.design = {parse_variant(fm_variant), fm_wb, fm_wt};
      const auto samples = fieldmap::sample(cfg.geometry.for_variant(spec.design.variant), spec);
      emit(fm_out, [&](std::ostream& os) { fieldmap::write_csv(os, samples); });
    } else if (*rd_cmd) {
      const RunConfig cfg = rd_c.load();
      RenderSettings s;
      s.scale_nm_per_px = rd_scale.value_or(cfg.imaging.scale_nm);
      s.width_px = cfg.imaging.width_px;
      s.height_px = cfg.imaging.height_px;
      s.noise_sigma = rd_noise.value_or(cfg.imaging.noise_sigma);
      s.fidelity = cfg.imaging.fidelity;
      if (!rd_layout.empty()) {
        if (rd_dir.empty()) throw CLI::RequiredError("--out-dir");
        std::vector<TestStructure> todo;
        for (const auto& st : load_layout(rd_layout).structures)
          if (!st.excluded) todo.push_back(st);
        fs::create_directories(rd_dir);
        parallel_for(todo.size(), [&](std::size_t i) {
          RenderSettings si = s;
          si.seed = rd_seed + i;
          const auto& st = todo[i];
          const auto img = imaging::render_junction(cfg.geometry.for_variant(st.design.variant), st.design,
                                                    st.position, si);
          pgm::write_file((fs::path(rd_dir) / (st.id + ".pgm")).string(), img);
        });
      } else {
        if (!rd_x || !rd_y || rd_out.empty()) throw CLI::RequiredError("-x, -y and --out (or --layout)");
        s.seed = rd_seed;
        const JunctionDesign d{Variant::Manhattan, rd_wb, rd_wt};
        pgm::write_file(rd_out, imaging::render_junction(cfg.geometry.manhattan, d, {*rd_x, *rd_y}, s));
      }
    } else if (*ex_cmd) {
      const RunConfig cfg = ex_c.load();
      std::vector<csv::ExtractionRow> rows(ex_images.size());
      parallel_for(ex_images.size(), [&](std::size_t i) {
        const auto img = pgm::read_file(ex_images[i], ex_scale);
        auto& row = rows[i];
        row.structure_id = stem_of(ex_images[i]);
        if (img.position) row.d_mm = img.position->radius_mm();
        try {
          row.result = imaging::extract_widths(img, cfg.imaging.threshold_count);
        } catch (const ExtractionFailure& e) {
          throw ExtractionFailure(ex_images[i] + ": " + e.what());
        }
      });
      emit(ex_out, [&](std::ostream& os) { csv::write_extractions(os, rows); });
    } else if (*cp_cmd) {
      const RunConfig cfg = cp_c.load();
      const auto out = compensation::compensated_layout(load_layout(cp_layout), cfg.geometry, cfg.compensation_fidelity,
                                                        cfg.compensation, cfg.compensation_mode);
      emit(cp_out, [&](std::ostream& os) { csv::write_layout(os, out); });
    } else if (*ref_cmd) {
      fs::create_directories(ref_dir);
      const fs::path dir(ref_dir);
      emit((dir / "default.cfg").string(), [](std::ostream& os) { os << config::to_text(RunConfig{}); });
      emit((dir / "tsv_reference.csv").string(), [](std::ostream& os) { csv::write_tsvs(os, layout::reference_tsvs()); });
      emit((dir / "sites_17q.csv").string(), [](std::ostream& os) { csv::write_sites(os, layout::reference_sites()); });
      emit((dir / "sweeps.csv").string(), [](std::ostream& os) { csv::write_sweeps(os, SweepTable::reference()); });
    }
  } catch (const CLI::ParseError& e) {
    std::cerr << "jju: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "jju: numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const DataError& e) {
    std::cerr << "jju: " << e.what() << '\n';
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "jju: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
