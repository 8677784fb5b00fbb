#pragma once

// Log-polar OAM sorter. The unwrapper element maps the input plane onto the
// corrector plane through a lens-coupled Fourier transform,
//   (x, y) -> (u, v) = (-a ln(r / b), a phi),
// the corrector removes the residual phase left by that mapping, and a second
// Fourier lens turns the resulting tilt exp(i ell v / a) into a lateral
// displacement along v on the detector. All lengths are physical (meters).

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "oamsort/constants.hpp"
#include "oamsort/grid.hpp"
#include "oamsort/peaks.hpp"
#include "oamsort/propagation.hpp"
#include "oamsort/trace.hpp"

namespace oamsort {

struct UV {
  double u;
  double v;
};

inline UV log_polar_map(double x, double y, double a, double b) {
  const double r = std::hypot(x, y);
  if (r == 0.0) throw InvalidArgument("log-polar map is singular at the origin");
  return {-a * std::log(r / b), a * std::atan2(y, x)};
}

/// Rectangle in the corrector plane passed by the order-selection aperture.
struct OrderWindow {
  double u_center = 0.0;
  double v_center = 0.0;
  double u_half = 0.0;
  double v_half = 0.0;

  bool contains(double u, double v) const {
    return std::abs(u - u_center) <= u_half && std::abs(v - v_center) <= v_half;
  }
};

/// Sampling choices behind SorterParams::for_grid.
struct SorterDesign {
  double pixels_per_ell = 5.0;  // detector pixels per unit of OAM
  int detector_zoom = 4;        // zero-padding factor of the corrector plane along v
  bool binarized = false;
};

struct SorterParams {
  double a = 0.0;          // m
  double b = 0.0;          // m
  double c = 0.0;          // carrier frequency of the binary corrector, 1/m
  double phi0 = constants::pi;  // phase step of the binary unwrapper
  double phi1 = constants::pi;  // phase step of the binary corrector
  double f_unwrap = 0.0;   // m
  double f_fourier = 0.0;  // m
  int detector_zoom = 1;
  ApertureSpec aperture;
  bool binarized = false;
  std::optional<OrderWindow> order_window;  // binarized mode only

  void validate() const {
    if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("sorter map parameters a and b must be positive");
    auto step_ok = [](double p) { return p > 0.0 && p <= constants::two_pi; };
    if (!step_ok(phi0) || !step_ok(phi1)) throw InvalidArgument("binary phase steps must lie in (0, 2pi]");
    if (!(f_unwrap > 0.0) || !(f_fourier > 0.0)) throw InvalidArgument("focal lengths must be positive");
    if (!std::isfinite(c)) throw InvalidArgument("carrier must be finite");
    if (detector_zoom < 1 || (detector_zoom & (detector_zoom - 1)) != 0) {
      throw InvalidArgument("detector zoom must be a power of two");
    }
  }

  /// Geometry for a grid. The unwrapper lens keeps the pixel pitch, so the
  /// corrector plane spans n pixels; a is chosen so one unit of OAM moves the
  /// spot by pixels_per_ell detector pixels, i.e. 2 pi a = zoom / pixels_per_ell
  /// of the corrector width. b puts the beam radius r_beam on u = 0 (smooth)
  /// or a quarter-width off axis (binarized, away from the zero order).
  static SorterParams for_grid(const GridSpec& grid, double r_max, double r_beam, SorterDesign design = {}) {
    if (!(design.pixels_per_ell > 0.0) || !(r_beam > 0.0) || design.detector_zoom < 1) {
      throw InvalidArgument("sorter design values must be positive");
    }
    const double fill = design.detector_zoom / design.pixels_per_ell;
    if (fill >= 1.0) throw InvalidArgument("the unwrapped strip would not fit in the corrector plane");
    SorterParams p;
    p.f_unwrap = grid.nx() * grid.dx() * grid.dx() / grid.wavelength();
    p.f_fourier = p.f_unwrap;
    p.detector_zoom = design.detector_zoom;
    const double corrector_pitch = grid.wavelength() * p.f_unwrap / (grid.ny() * grid.dy());
    const double width = grid.ny() * corrector_pitch;
    p.a = fill * width / constants::two_pi;
    p.b = r_beam;
    p.aperture = ApertureSpec{r_max, std::nullopt};
    p.binarized = design.binarized;
    if (design.binarized) {
      const double u_center = 0.25 * width;
      p.b = r_beam * std::exp(u_center / p.a);
      // The +1 order of the binary corrector lands a quarter-width away.
      p.c = 1.0 / (4.0 * corrector_pitch);
      p.order_window = OrderWindow{u_center, 0.0, 0.2 * width, 1.1 * constants::pi * p.a};
    }
    p.validate();
    return p;
  }
};

namespace detail {

inline double sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace detail

/// Unwrapper phase at input-plane position (x, y). The smooth kinoform has
/// gradient (2 pi / lambda f) (u, v); the binarized element is its two-level
/// quantization with step phi0 (levels -phi0/2, +phi0/2).
inline double unwrapper_phase(double x, double y, const SorterParams& p, double wavelength) {
  const double r = std::hypot(x, y);
  if (r == 0.0) return 0.0;
  const double k = constants::two_pi * p.a / (wavelength * p.f_unwrap);
  const double smooth = k * (y * std::atan2(y, x) - x * std::log(r / p.b) + x);
  if (!p.binarized) return smooth;
  return 0.5 * p.phi0 * detail::sign(std::sin(smooth));
}

/// Corrector phase at corrector-plane position (u, v): cancels the residual
/// 2 pi a x / (lambda f) = (2 pi a b / lambda f) e^{-u/a} cos(v/a) left by the
/// unwrapper. The binarized element adds the carrier 2 pi c v before
/// quantizing with step phi1.
inline double corrector_phase(double u, double v, const SorterParams& p, double wavelength) {
  const double k = constants::two_pi * p.a * p.b / (wavelength * p.f_unwrap);
  const double smooth = -k * std::exp(std::min(-u / p.a, 700.0)) * std::cos(v / p.a);
  if (!p.binarized) return smooth;
  return 0.5 * p.phi1 * detail::sign(std::sin(smooth + constants::two_pi * p.c * v));
}

struct SorterResult {
  RealImage corrector_intensity;
  RealImage detector;
  DetectorTrace trace;
  double post_aperture_norm2 = 0.0;
  double detector_total = 0.0;
  /// Detector power over post-aperture power (1 for smooth elements).
  double selected_fraction = 0.0;
  double corrector_pitch = 0.0;
  double detector_pitch = 0.0;
};

/// Detector image summed over the u direction, with positions in pixels from
/// the optical axis.
inline DetectorTrace extract_trace(const RealImage& detector) {
  DetectorTrace t;
  t.positions.resize(detector.ny);
  t.counts.assign(detector.ny, 0.0);
  for (int iy = 0; iy < detector.ny; ++iy) {
    t.positions[iy] = iy - detector.ny / 2;
    double s = 0.0;
    for (int ix = 0; ix < detector.nx; ++ix) s += detector.at(ix, iy);
    t.counts[iy] = s;
  }
  return t;
}

inline SorterResult run_sorter(const ComplexField& input, const SorterParams& params) {
  params.validate();
  const double lambda = input.grid().wavelength();
  const ComplexField apertured = apply_aperture(input, params.aperture);

  SorterResult result;
  result.post_aperture_norm2 = apertured.norm_squared();

  const ComplexField unwrapped = apply_phase(apertured, [&](double x, double y) {
    return unwrapper_phase(x, y, params, lambda);
  });
  ComplexField corrector_plane = to_focal_plane(unwrapped, params.f_unwrap);
  if (params.binarized && params.order_window) {
    const auto& w = *params.order_window;
    for_each_pixel(corrector_plane.grid(), [&](int ix, int iy, double u, double v) {
      if (!w.contains(u, v)) corrector_plane.at(ix, iy) = 0.0;
    });
  }
  result.corrector_intensity = intensity(corrector_plane);
  result.corrector_pitch = corrector_plane.grid().dy();

  const ComplexField corrected = apply_phase(corrector_plane, [&](double u, double v) {
    return corrector_phase(u, v, params, lambda);
  });
  const GridSpec& cg = corrected.grid();
  const ComplexField detector_plane = to_focal_plane(
      params.detector_zoom > 1 ? pad_field(corrected, cg.nx(), cg.ny() * params.detector_zoom) : corrected,
      params.f_fourier);
  result.detector = intensity(detector_plane);
  result.detector_pitch = detector_plane.grid().dy();
  result.detector_total = result.detector.sum();
  result.selected_fraction =
      result.post_aperture_norm2 > 0.0 ? result.detector_total / result.post_aperture_norm2 : 0.0;
  result.trace = extract_trace(result.detector);
  return result;
}

/// Reference trace of known OAM content: one ell, or a +/- ell pair.
struct ReferenceTrace {
  std::vector<int> ells;
  DetectorTrace trace;
};

/// Least-squares straight line through (ell, peak centroid) pairs. Peaks of a
/// multi-ell reference are matched to its ells in increasing order (position
/// grows with ell).
inline Calibration calibrate_dispersion(std::span<const ReferenceTrace> refs, PeakOptions opt = {}) {
  std::vector<int> distinct;
  for (const auto& ref : refs) {
    if (ref.ells.empty()) throw InvalidArgument("reference trace lists no ell values");
    distinct.insert(distinct.end(), ref.ells.begin(), ref.ells.end());
  }
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) throw InvalidArgument("calibration needs at least two distinct ell values");

  std::vector<double> ells, positions;
  for (const auto& ref : refs) {
    auto peaks = find_peaks(ref.trace, opt);
    if (peaks.size() < ref.ells.size()) {
      throw NumericError("reference trace shows fewer peaks than its listed ell values");
    }
    peaks.resize(ref.ells.size());
    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.position < b.position; });
    std::vector<int> sorted = ref.ells;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      ells.push_back(sorted[i]);
      positions.push_back(peaks[i].position);
    }
  }

  const double n = static_cast<double>(ells.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < ells.size(); ++i) {
    mx += ells[i];
    my += positions[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < ells.size(); ++i) {
    sxx += (ells[i] - mx) * (ells[i] - mx);
    sxy += (ells[i] - mx) * (positions[i] - my);
    syy += (positions[i] - my) * (positions[i] - my);
  }
  Calibration cal;
  cal.scale = sxy / sxx;
  cal.offset = my - cal.scale * mx;
  cal.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  if (!(std::abs(cal.scale) > 0.0)) throw NumericError("degenerate dispersion fit");
  return cal;
}

}  // namespace oamsort
