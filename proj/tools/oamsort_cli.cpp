// oamsort: generate beams, sort them, process detector traces and run the
// canned figure experiments. Every run writes manifest.cfg next to its
// outputs; passing that file back through --config repeats the run.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "oamsort/experiments.hpp"
#include "oamsort/io.hpp"
#include "oamsort/manifest.hpp"

namespace fs = std::filesystem;
using namespace oamsort;

namespace {

struct Common {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<long> seed;
  std::optional<int> threads;
  bool dump_stages = false;
  std::vector<std::string> overrides;  // section.key=value
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "configuration file (a previous manifest.cfg works too)");
  cmd->add_option("--out", c.out_dir, "output directory (created if missing)");
  cmd->add_option("--seed", c.seed, "seed for Poisson detector noise (overrides run.seed)");
  cmd->add_option("--threads", c.threads, "FFT threads (overrides run.threads)")->check(CLI::PositiveNumber);
  cmd->add_flag("--dump-stages", c.dump_stages, "also write intermediate processing stages");
  cmd->add_option("--set", c.overrides, "override a config value, e.g. --set source.ell=3");
}

Config resolve_config(const Common& c) {
  Config cfg = c.config_path.empty() ? Config::defaults() : Config::load(c.config_path);
  for (const auto& o : c.overrides) {
    const auto dot = o.find('.');
    const auto eq = o.find('=');
    if (dot == std::string::npos || eq == std::string::npos || dot > eq) {
      throw ConfigError("--set expects section.key=value, got '" + o + "'");
    }
    cfg.set(o.substr(0, dot), o.substr(dot + 1, eq - dot - 1), o.substr(eq + 1));
  }
  if (c.seed) cfg.set("run", "seed", std::to_string(*c.seed));
  if (c.threads) cfg.set("run", "threads", std::to_string(*c.threads));
  return cfg;
}

std::string real_text(double v) {
  std::ostringstream o;
  o.precision(17);
  o << v;
  return o.str();
}

/// Collects output files so their hashes land in the manifest.
class Outputs {
 public:
  Outputs(std::string dir, RunManifest manifest) : dir_(std::move(dir)), manifest_(std::move(manifest)) {
    fs::create_directories(dir_);
    hash_ = manifest_.hash();
  }

  io::Comments comments() const { return {"manifest: " + hash_}; }
  std::string path(const std::string& name) const { return (fs::path(dir_) / name).string(); }
  void note(const std::string& line) { manifest_.notes.push_back(line); }

  void record(const std::string& name) { manifest_.outputs.emplace_back(name, sha256_file(path(name))); }

  void trace(const std::string& name, const DetectorTrace& t) {
    io::write_trace_csv(path(name), t, comments());
    record(name);
  }
  void spectrum(const std::string& name, const OamSpectrum& s) {
    io::write_spectrum_csv(path(name), s, comments());
    record(name);
  }
  void image(const std::string& name, const RealImage& img) {
    io::write_pgm16(path(name), img, comments());
    record(name);
  }
  void table(const std::string& name, const std::vector<std::string>& header,
             const std::vector<std::vector<std::string>>& rows) {
    io::write_table_csv(path(name), header, rows, comments());
    record(name);
  }
  void text(const std::string& name, const std::string& body) {
    std::ofstream out(path(name));
    for (const auto& c : comments()) out << "# " << c << "\n";
    out << body;
    if (!out) throw Error("failed writing " + path(name));
    record(name);
  }

  void finish() const { manifest_.write(path("manifest.cfg")); }

 private:
  std::string dir_;
  RunManifest manifest_;
  std::string hash_;
};

RunManifest manifest_for(const std::string& command, const Config& cfg) {
  RunManifest m;
  m.command = command;
  m.config = cfg;
  return m;
}

Setup setup_for(const Config& cfg) {
  fft::set_threads(static_cast<int>(cfg.integer("run", "threads")));
  return make_setup(cfg);
}

RealImage phase_image(const ComplexField& f) {
  const GridSpec& g = f.grid();
  RealImage img{g.nx(), g.ny(), std::vector<double>(g.size())};
  for (int iy = 0; iy < g.ny(); ++iy) {
    for (int ix = 0; ix < g.nx(); ++ix) img.at(ix, iy) = std::arg(f.at(ix, iy));
  }
  return img;
}

/// Config with the grid keys taken from a field dump, so sorting uses the
/// geometry the field was generated on.
Config with_grid_of(Config cfg, const GridSpec& g) {
  cfg.set("grid", "nx", std::to_string(g.nx()));
  cfg.set("grid", "ny", std::to_string(g.ny()));
  cfg.set("grid", "dx", real_text(g.dx()));
  cfg.set("grid", "dy", real_text(g.dy()));
  cfg.set("grid", "wavelength", real_text(g.wavelength()));
  return cfg;
}

void cmd_generate(const Common& c) {
  const Config cfg = resolve_config(c);
  const Setup s = setup_for(cfg);
  const ComplexField beam = make_source(s);
  Outputs out(c.out_dir, manifest_for("generate", cfg));
  io::write_field(out.path("field.oamf"), beam, out.comments().front());
  out.record("field.oamf");
  out.image("intensity.pgm", intensity(beam));
  io::write_phase_pgm8(out.path("phase.pgm"), phase_image(beam), out.comments());
  out.record("phase.pgm");
  out.finish();
}

void cmd_sort(const Common& c, const std::string& field_path) {
  const ComplexField beam = io::read_field(field_path);
  const Config cfg = with_grid_of(resolve_config(c), beam.grid());
  const Setup s = setup_for(cfg);
  RunManifest m = manifest_for("sort", cfg);
  m.inputs.emplace_back(fs::path(field_path).filename().string(), sha256_file(field_path));
  Outputs out(c.out_dir, m);
  const SorterResult r = sort_beam(s, beam);
  out.image("detector.pgm", r.detector);
  out.image("corrector.pgm", r.corrector_intensity);
  out.trace("trace.csv", r.trace);
  out.note("detector_pitch_m = " + real_text(r.detector_pitch));
  out.note("detector_fraction = " + real_text(r.selected_fraction));
  out.finish();
}

void write_instrument(Outputs& out, const Instrument& inst) {
  out.note("calibration_scale_px_per_ell = " + real_text(inst.calibration.scale));
  out.note("calibration_offset_px = " + real_text(inst.calibration.offset));
  out.note("calibration_r_squared = " + real_text(inst.calibration.r_squared));
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < inst.psf.kernel.size(); ++i) {
    rows.push_back({std::to_string(static_cast<long>(i) - static_cast<long>(inst.psf.origin)),
                    real_text(inst.psf.kernel[i])});
  }
  out.table("psf.csv", {"offset_px", "weight"}, rows);
}

void cmd_calibrate(const Common& c) {
  const Config cfg = resolve_config(c);
  const Setup s = setup_for(cfg);
  const Instrument inst = calibrate_instrument(s);
  Outputs out(c.out_dir, manifest_for("calibrate", cfg));
  out.trace("zero_reference.csv", inst.zero_reference);
  out.trace("pair_reference.csv", inst.pair_reference);
  write_instrument(out, inst);
  out.finish();
}

void cmd_process(const Common& c, const std::string& trace_path, const std::string& refs_dir) {
  if (refs_dir.empty()) throw ConfigError("process needs --references DIR (the output of 'calibrate')");
  const std::string zero_path = (fs::path(refs_dir) / "zero_reference.csv").string();
  const std::string pair_path = (fs::path(refs_dir) / "pair_reference.csv").string();
  for (const auto& p : {zero_path, pair_path}) {
    if (!fs::exists(p)) throw ConfigError("missing reference trace " + p);
  }
  const Config cfg = resolve_config(c);
  const Setup s = setup_for(cfg);
  RunManifest m = manifest_for("process", cfg);
  m.inputs.emplace_back(fs::path(trace_path).filename().string(), sha256_file(trace_path));
  m.inputs.emplace_back("zero_reference.csv", sha256_file(zero_path));
  m.inputs.emplace_back("pair_reference.csv", sha256_file(pair_path));
  Outputs out(c.out_dir, m);

  const Instrument inst = instrument_from_references(io::read_trace_csv(zero_path), io::read_trace_csv(pair_path),
                                                     s.processing);
  const ProcessingReport rep = process_trace(io::read_trace_csv(trace_path), inst.calibration, inst.psf, s.processing);
  out.spectrum("spectrum.csv", rep.spectrum);
  out.text("report.txt", rep.to_text());
  write_instrument(out, inst);
  if (c.dump_stages) {
    out.trace("stage_background.csv", rep.background_subtracted);
    out.trace("stage_clipped.csv", rep.clipped);
    out.trace("stage_deconvolved.csv", rep.mem.trace);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < rep.mem.chi2_history.size(); ++i) {
      rows.push_back({std::to_string(i), real_text(rep.mem.chi2_history[i])});
    }
    out.table("stage_mem_chi2.csv", {"iteration", "chi2_per_point"}, rows);
  }
  out.finish();
}

void cmd_experiment(const Common& c, const std::string& name) {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string valid;
    for (const auto& n : names) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("unknown experiment '" + name + "'; valid: " + valid);
  }
  const Config cfg = resolve_config(c);
  const Setup s = setup_for(cfg);
  const ExperimentResult r = run_experiment(name, s);
  Outputs out(c.out_dir, manifest_for("experiment " + name, cfg));
  for (const auto& [key, img] : r.images) out.image(key + ".pgm", img);
  for (const auto& [key, t] : r.traces) out.trace(key + ".csv", t);
  for (const auto& [key, sp] : r.spectra) out.spectrum(key + ".csv", sp);
  if (!r.table_header.empty()) out.table("table.csv", r.table_header, r.table_rows);
  std::vector<std::vector<std::string>> rows;
  for (const auto& [k, v] : r.summary) rows.push_back({k, v});
  out.table("summary.csv", {"quantity", "value"}, rows);
  out.finish();
  for (const auto& [k, v] : r.summary) std::cout << k << " = " << v << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Electron OAM sorter simulation and spectrum processing"};
  app.set_version_flag("--version", std::string(version));
  app.require_subcommand(1);

  Common common;
  auto* gen = app.add_subcommand("generate", "build the source beam and write a field dump");
  add_common(gen, common);

  std::string field_path;
  auto* sort = app.add_subcommand("sort", "run a field dump through the sorter");
  sort->add_option("field", field_path, "field dump from 'generate'")->required()->check(CLI::ExistingFile);
  add_common(sort, common);

  auto* cal = app.add_subcommand("calibrate", "sort the reference beams and derive calibration and PSF");
  add_common(cal, common);

  std::string trace_path, refs_dir;
  auto* proc = app.add_subcommand("process", "background, clip, deconvolve and bin a detector trace");
  proc->add_option("trace", trace_path, "trace CSV from 'sort'")->required()->check(CLI::ExistingFile);
  proc->add_option("--references", refs_dir, "directory written by 'calibrate'");
  add_common(proc, common);

  std::string experiment;
  auto* exp = app.add_subcommand("experiment", "run a canned figure recipe end to end");
  exp->add_option("name", experiment, "fig1, fig2a, fig2b, fig2c, fig2d or fig3")->required();
  add_common(exp, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) cmd_generate(common);
    if (*sort) cmd_sort(common, field_path);
    if (*cal) cmd_calibrate(common);
    if (*proc) cmd_process(common, trace_path, refs_dir);
    if (*exp) cmd_experiment(common, experiment);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid setting: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
