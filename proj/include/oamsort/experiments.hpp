#pragma once

// End-to-end recipes: build a beam, sort it, process the trace. The figure
// recipes (fig1, fig2a-d, fig3) return everything they compute in memory;
// writing files is left to the caller.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oamsort/config.hpp"
#include "oamsort/dipole.hpp"
#include "oamsort/fft.hpp"
#include "oamsort/oracle.hpp"
#include "oamsort/sorter.hpp"
#include "oamsort/sources.hpp"
#include "oamsort/spectro.hpp"

namespace oamsort {

/// Everything a recipe needs, resolved from a Config ("auto" filled in).
struct Setup {
  Config config;
  GridSpec grid;
  double r_max;
  SorterParams sorter;
  RadialProfile profile;
  double gaussian_w0;
  ProcessingConfig processing;
  OracleConfig oracle;
  int report_ell_max;
  double poisson_counts;
  std::uint64_t seed;
};

inline Setup make_setup(const Config& c) {
  const GridSpec grid(static_cast<int>(c.integer("grid", "nx")), static_cast<int>(c.integer("grid", "ny")),
                      c.real("grid", "dx"), c.real("grid", "dy"), c.real("grid", "wavelength"));
  const double r_max = c.real_or("sorter", "r_max", 0.875 * grid.half_extent());

  SorterDesign design;
  design.pixels_per_ell = c.real("sorter", "pixels_per_ell");
  design.detector_zoom = static_cast<int>(c.integer("sorter", "detector_zoom"));
  design.binarized = c.boolean("sorter", "binarized");
  SorterParams sorter =
      SorterParams::for_grid(grid, r_max, c.real_or("sorter", "beam_radius", 0.5 * r_max), design);
  sorter.phi0 = c.real("sorter", "phi0");
  sorter.phi1 = c.real("sorter", "phi1");
  sorter.validate();

  const double w0 = c.real_or("source", "w0", 0.5 * r_max);
  RadialProfile profile = c.text("source", "profile") == "gaussian"
                              ? RadialProfile(GaussianProfile{w0})
                              : RadialProfile(RingProfile{c.real_or("source", "ring_r0", 0.5 * r_max),
                                                          c.real_or("source", "ring_width", 0.25 * r_max)});

  ProcessingConfig pc;
  pc.background_poly_order = static_cast<int>(c.integer("process", "background_poly_order"));
  pc.mem_iterations = static_cast<int>(c.integer("process", "mem_iterations"));
  pc.mem_tolerance = c.real("process", "mem_tolerance");
  pc.mem_noise_floor = c.real("process", "mem_noise_floor");
  pc.bin_offset_search = c.real("process", "bin_offset_search");
  pc.clip_negatives = c.boolean("process", "clip_negatives");
  pc.psf_half_width = c.real("process", "psf_half_width");

  const double counts = c.real("detector", "poisson_counts");
  if (counts < 0.0) throw ConfigError("detector.poisson_counts must be >= 0");
  const std::string noise = c.is_auto("process", "noise_model") ? (counts > 0.0 ? "poisson" : "uniform")
                                                                 : c.text("process", "noise_model");
  pc.noise_model = noise == "poisson" ? NoiseModel::Poisson : NoiseModel::Uniform;
  pc.validate();

  OracleConfig oc;
  oc.n_rings = static_cast<int>(c.integer_or("oracle", "n_rings", 0));
  oc.n_azimuth = static_cast<int>(c.integer_or("oracle", "n_azimuth", 0));

  return Setup{c, grid, r_max, sorter, profile, w0, pc, oc,
               static_cast<int>(c.integer("process", "report_ell_max")), counts,
               static_cast<std::uint64_t>(c.integer("run", "seed"))};
}

/// Equal-weight superposition of vortices sharing the setup's radial profile.
inline ComplexField vortex_beam(const Setup& s, const std::vector<int>& ells) {
  if (ells.empty()) throw InvalidArgument("a vortex beam needs at least one ell");
  std::vector<ComplexField> parts;
  parts.reserve(ells.size());
  for (int ell : ells) parts.push_back(vortex(s.grid, {ell, s.profile}));
  std::vector<SuperpositionTerm> terms;
  for (const auto& p : parts) terms.push_back({1.0, std::cref(p)});
  return superpose(terms);
}

inline MaskSpec mask_from_config(const Config& c) {
  MaskSpec m;
  m.kind = c.text("source", "mask_kind") == "two-level" ? MaskKind::TwoLevel : MaskKind::Spiral;
  m.n = static_cast<int>(c.integer("source", "mask_n"));
  m.delta0 = c.real("source", "mask_delta0");
  m.absorption = c.real("source", "mask_absorption");
  m.validate();
  return m;
}

inline DipoleSpec dipole_from_config(const Setup& s) {
  const Config& c = s.config;
  double moment = c.real("dipole", "moment");
  if (!c.is_auto("dipole", "chi_at_rmax")) moment = DipoleSpec::moment_for_chi(c.real("dipole", "chi_at_rmax"), s.r_max);
  DipoleSpec d = DipoleSpec::sampled(moment, s.grid);
  if (!c.is_auto("dipole", "r_clamp")) d.r_clamp = c.real("dipole", "r_clamp");
  d.validate();
  return d;
}

/// The source described by the [source] section (and [dipole] for dipoles).
inline ComplexField make_source(const Setup& s) {
  const Config& c = s.config;
  const std::string kind = c.text("source", "kind");
  if (kind == "gaussian") return gaussian(s.grid, s.gaussian_w0);
  if (kind == "vortex") return vortex_beam(s, {static_cast<int>(c.integer("source", "ell"))});
  if (kind == "superposition") return vortex_beam(s, c.int_list("source", "ells"));
  if (kind == "mask") return normalize(apply_mask(vortex_beam(s, {0}), mask_from_config(c)));
  return apply_dipole_phase(vortex_beam(s, {0}), dipole_from_config(s));
}

/// Replaces each pixel by a Poisson draw with mean proportional to its value,
/// scaled so the expected total is `counts`.
inline RealImage shot_noise(const RealImage& img, double counts, std::uint64_t seed) {
  RealImage out = img;
  const double total = img.sum();
  if (!(counts > 0.0) || !(total > 0.0)) return out;
  std::mt19937_64 rng(seed);
  const double scale = counts / total;
  for (double& v : out.data) {
    const double mean = std::max(v, 0.0) * scale;
    v = mean > 0.0 ? static_cast<double>(std::poisson_distribution<long long>(mean)(rng)) : 0.0;
  }
  return out;
}

/// Sorter run followed by optional shot noise on the detector image.
inline SorterResult sort_beam(const Setup& s, const ComplexField& beam, std::uint64_t seed_offset = 0) {
  SorterResult r = run_sorter(beam, s.sorter);
  if (s.poisson_counts > 0.0) {
    r.detector = shot_noise(r.detector, s.poisson_counts, s.seed + seed_offset);
    r.trace = extract_trace(r.detector);
  }
  return r;
}

/// Dispersion calibration and PSF from the zero-OAM and +/-4 reference beams.
struct Instrument {
  Calibration calibration;
  PointSpreadFunction psf;
  DetectorTrace zero_reference;
  DetectorTrace pair_reference;
};

/// Builds the instrument from raw reference traces (ell = 0 and ell = +/-4).
inline Instrument instrument_from_references(DetectorTrace zero, DetectorTrace pair, const ProcessingConfig& pc) {
  Instrument inst;
  inst.zero_reference = std::move(zero);
  inst.pair_reference = std::move(pair);
  const int order = pc.background_poly_order;
  const std::vector<ReferenceTrace> refs = {{{0}, subtract_background(inst.zero_reference, order)},
                                            {{-4, 4}, subtract_background(inst.pair_reference, order)}};
  inst.calibration = calibrate_dispersion(refs);
  inst.psf = build_psf(clip_negative(refs[0].trace), inst.calibration.scale, pc.psf_half_width);
  return inst;
}

inline Instrument calibrate_instrument(const Setup& s) {
  return instrument_from_references(sort_beam(s, vortex_beam(s, {0}), 101).trace,
                                    sort_beam(s, vortex_beam(s, {-4, 4}), 102).trace, s.processing);
}

struct StateResult {
  SorterResult sorted;
  ProcessingReport processed;
  double crosstalk = 0.0;
  std::vector<double> peak_ells;  // calibrated positions of peaks in the deconvolved trace
};

inline StateResult measure(const Setup& s, const Instrument& inst, const ComplexField& beam,
                           const std::set<int>& intended, std::uint64_t seed_offset = 0) {
  StateResult r;
  r.sorted = sort_beam(s, beam, seed_offset);
  r.processed = process_trace(r.sorted.trace, inst.calibration, inst.psf, s.processing);
  r.crosstalk = intended.empty() ? 0.0 : crosstalk(r.processed.spectrum, intended);
  const auto& t = r.processed.mem.trace;
  for (const auto& p : find_peaks(t)) r.peak_ells.push_back(inst.calibration.ell_at(p.position));
  std::sort(r.peak_ells.begin(), r.peak_ells.end());
  return r;
}

/// Spectrum restricted to [-ell_max, ell_max] (weights outside are dropped,
/// not renormalized).
inline OamSpectrum crop_spectrum(const OamSpectrum& s, int ell_max) {
  OamSpectrum out = OamSpectrum::zeros(ell_max);
  for (int ell = -ell_max; ell <= ell_max; ++ell) out.set(ell, s[ell]);
  return out;
}

/// sqrt of the ratio of principal second moments of an intensity image.
inline double elongation(const RealImage& img) {
  double sum = 0, mx = 0, my = 0;
  for (int iy = 0; iy < img.ny; ++iy) {
    for (int ix = 0; ix < img.nx; ++ix) {
      const double w = img.at(ix, iy);
      sum += w;
      mx += w * ix;
      my += w * iy;
    }
  }
  if (!(sum > 0.0)) return 1.0;
  mx /= sum;
  my /= sum;
  double sxx = 0, syy = 0, sxy = 0;
  for (int iy = 0; iy < img.ny; ++iy) {
    for (int ix = 0; ix < img.nx; ++ix) {
      const double w = img.at(ix, iy) / sum;
      sxx += w * (ix - mx) * (ix - mx);
      syy += w * (iy - my) * (iy - my);
      sxy += w * (ix - mx) * (iy - my);
    }
  }
  const double tr = sxx + syy, det = sxx * syy - sxy * sxy;
  const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
  const double l1 = 0.5 * tr + disc, l2 = std::max(0.5 * tr - disc, 1e-300);
  return std::sqrt(l1 / l2);
}

struct ExperimentResult {
  std::string name;
  std::map<std::string, RealImage> images;        // 16-bit intensity previews
  std::map<std::string, DetectorTrace> traces;
  std::map<std::string, OamSpectrum> spectra;
  std::vector<std::pair<std::string, std::string>> summary;
  /// Optional extra table, e.g. expected vs obtained spectra.
  std::vector<std::string> table_header;
  std::vector<std::vector<std::string>> table_rows;

  void add(const std::string& key, double value) {
    std::ostringstream o;
    o.precision(10);
    o << value;
    summary.emplace_back(key, o.str());
  }
  void add(const std::string& key, const std::string& value) { summary.emplace_back(key, value); }

  std::string value(const std::string& key) const {
    for (const auto& [k, v] : summary) {
      if (k == key) return v;
    }
    throw InvalidArgument("experiment summary has no entry '" + key + "'");
  }
  double number(const std::string& key) const { return std::stod(value(key)); }
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"fig1", "fig2a", "fig2b", "fig2c", "fig2d", "fig3"};
  return names;
}

namespace detail {

inline std::string join(const std::vector<double>& v) {
  std::ostringstream o;
  o.precision(6);
  for (std::size_t i = 0; i < v.size(); ++i) o << (i ? ";" : "") << v[i];
  return o.str();
}

inline void record_state(ExperimentResult& out, const Setup& s, const Instrument& inst, const StateResult& r) {
  out.images["detector"] = r.sorted.detector;
  out.images["corrector"] = r.sorted.corrector_intensity;
  out.traces["trace_raw"] = r.sorted.trace;
  out.traces["trace_background"] = r.processed.background_subtracted;
  out.traces["trace_deconvolved"] = r.processed.mem.trace;
  out.spectra["spectrum"] = crop_spectrum(r.processed.spectrum, s.report_ell_max);
  out.add("calibration_scale_px_per_ell", inst.calibration.scale);
  out.add("calibration_offset_px", inst.calibration.offset);
  out.add("calibration_r_squared", inst.calibration.r_squared);
  out.add("mem_converged", r.processed.mem.converged ? "true" : "false");
  out.add("mem_iterations", r.processed.mem.iterations);
  out.add("mem_chi2_per_point", r.processed.mem.chi2_per_point);
  out.add("bin_offset", r.processed.offset.offset);
  out.add("peak_ells", join(r.peak_ells));
  out.add("detector_fraction", r.sorted.selected_fraction);
}

inline ExperimentResult fig2(const Setup& s, const std::string& name, const MaskSpec& mask,
                             const std::set<int>& intended, double paper_crosstalk) {
  ExperimentResult out;
  out.name = name;
  const Instrument inst = calibrate_instrument(s);
  const ComplexField beam = normalize(apply_mask(vortex_beam(s, {0}), mask));
  out.images["input"] = intensity(beam);
  const OamSpectrum truth = azimuthal_decompose(beam, s.report_ell_max, s.oracle);
  out.spectra["oracle"] = truth;
  const StateResult r = measure(s, inst, beam, intended);
  record_state(out, s, inst, r);
  out.add("crosstalk", r.crosstalk);
  out.add("oracle_crosstalk", crosstalk(truth, intended));
  out.add("paper_crosstalk", paper_crosstalk);
  return out;
}

}  // namespace detail

inline ExperimentResult run_experiment(const std::string& name, const Setup& s) {
  if (name == "fig1") {
    ExperimentResult out;
    out.name = name;
    const Instrument inst = calibrate_instrument(s);
    const ComplexField beam = vortex_beam(s, {-5, 5});
    out.images["input"] = intensity(beam);
    double radius = 0.5 * s.r_max;
    if (const auto* ring = std::get_if<RingProfile>(&s.profile)) radius = ring->r0;
    out.add("lobes", dominant_intensity_harmonic(beam, radius));
    const StateResult r = measure(s, inst, beam, {-5, 5});
    detail::record_state(out, s, inst, r);
    out.add("corrector_elongation", elongation(r.sorted.corrector_intensity));
    out.add("crosstalk", r.crosstalk);
    return out;
  }
  if (name == "fig2a") return detail::fig2(s, name, {MaskKind::Spiral, 1, constants::two_pi, 0.0}, {1}, 0.28);
  if (name == "fig2b") return detail::fig2(s, name, {MaskKind::TwoLevel, 4, constants::pi, 0.0}, {-4, 4}, 0.43);
  if (name == "fig2c") return detail::fig2(s, name, {MaskKind::TwoLevel, 5, constants::pi, 0.0}, {-5, 5}, 0.39);
  if (name == "fig2d") return detail::fig2(s, name, {MaskKind::Spiral, 10, constants::two_pi, 0.0}, {10}, 0.18);
  if (name == "fig3") {
    ExperimentResult out;
    out.name = name;
    const Instrument inst = calibrate_instrument(s);
    const Config& c = s.config;
    // The dipole beam is an annulus at the aperture edge: the electrons near
    // r_max dominate the measured spectrum, so chi(r_max) sets its shape.
    const RingProfile edge{c.real_or("dipole", "ring_r0", 0.9 * s.r_max),
                           c.real_or("dipole", "ring_width", 0.1 * s.r_max)};
    Config dc = c;
    if (dc.is_auto("dipole", "chi_at_rmax")) dc.set("dipole", "chi_at_rmax", "5");
    Setup ds = s;
    ds.config = dc;
    const DipoleSpec dipole = dipole_from_config(ds);
    const double chi_rmax = chi(s.r_max, dipole);
    const ComplexField beam = apply_dipole_phase(vortex(s.grid, {0, edge}), dipole);
    out.images["input"] = intensity(beam);
    const StateResult r = measure(s, inst, beam, {});
    detail::record_state(out, s, inst, r);

    const OamSpectrum& measured = r.processed.spectrum;
    const int reach = std::max(std::abs(measured.ell_min()), std::abs(measured.ell_max()));
    const OamSpectrum expected = analytic_dipole_spectrum(chi_rmax, reach);
    const double fid = spectrum_fidelity(measured, expected);
    const MomentEstimate est = estimate_moment(measured, s.r_max);
    const OamSpectrum oracle = azimuthal_decompose(beam, s.report_ell_max, s.oracle);
    out.spectra["oracle"] = oracle;
    out.spectra["expected"] = analytic_dipole_spectrum(chi_rmax, s.report_ell_max);

    out.add("moment_true_muB", dipole.moment);
    out.add("chi_rmax", chi_rmax);
    out.add("r_clamp_m", dipole.r_clamp);
    out.add("fidelity_vs_bessel", fid);
    out.add("oracle_fidelity_vs_bessel",
            spectrum_fidelity(oracle, analytic_dipole_spectrum(chi_rmax, s.report_ell_max)));
    out.add("moment_estimate_muB", est.moment);
    out.add("moment_uncertainty_muB", est.uncertainty);
    out.add("moment_ratio", est.moment / dipole.moment);
    out.add("chi_fit", est.chi);
    out.add("mean_abs_ell", est.mean_abs_ell);

    const OamSpectrum shown = crop_spectrum(measured, s.report_ell_max);
    const OamSpectrum curve = out.spectra["expected"];
    out.table_header = {"ell", "expected", "obtained"};
    for (int ell = -s.report_ell_max; ell <= s.report_ell_max; ++ell) {
      std::ostringstream e, o;
      e.precision(10);
      o.precision(10);
      e << curve[ell];
      o << shown[ell];
      out.table_rows.push_back({std::to_string(ell), e.str(), o.str()});
    }
    return out;
  }
  std::string valid;
  for (const auto& n : experiment_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw InvalidArgument("unknown experiment '" + name + "'; valid: " + valid);
}

}  // namespace oamsort
