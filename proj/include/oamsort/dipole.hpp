#pragma once

// Phase imprinted by a magnetic dipole, exp(i chi(r) sin phi) with
// chi(r) = e mu0 M / (h r), and the OAM content it implies.

#include <algorithm>
#include <cmath>
#include <vector>

#include "oamsort/constants.hpp"
#include "oamsort/grid.hpp"
#include "oamsort/quadrature.hpp"
#include "oamsort/spectrum.hpp"

namespace oamsort {

struct DipoleSpec {
  double moment = 0.0;   // Bohr magnetons
  double r_clamp = 0.0;  // m

  void validate() const {
    if (!(moment >= 0.0) || !std::isfinite(moment)) throw InvalidArgument("dipole moment must be finite and >= 0");
    if (!(r_clamp > 0.0)) throw InvalidArgument("dipole clamp radius must be positive");
  }

  /// chi(r) * r, in meters.
  double strength() const { return constants::dipole_length_per_bohr_magneton * moment; }

  /// Clamp radius at which the phase gradient strength / r^2 falls to half the
  /// Nyquist limit pi / pitch, and never below two pixels.
  static DipoleSpec sampled(double moment, const GridSpec& grid) {
    const double pitch = std::max(grid.dx(), grid.dy());
    const double strength = constants::dipole_length_per_bohr_magneton * moment;
    const double r = std::sqrt(2.0 * strength * pitch / constants::pi);
    return {moment, std::max(2.0 * pitch, r)};
  }

  /// Moment that gives chi(r) = chi_value.
  static double moment_for_chi(double chi_value, double r) {
    return chi_value * r / constants::dipole_length_per_bohr_magneton;
  }
};

struct RadialWindow {
  double r0 = 0.0;
  double sigma = 0.0;

  void validate() const {
    if (!(sigma > 0.0) || !(r0 > sigma)) throw InvalidArgument("radial window needs r0 > sigma > 0");
  }
};

inline double chi(double r, const DipoleSpec& spec) {
  if (!(r > 0.0)) throw InvalidArgument("chi is defined for r > 0 only");
  spec.validate();
  return spec.strength() / std::max(r, spec.r_clamp);
}

/// J_ell(x) for any integer order, using J_{-n} = (-1)^n J_n.
inline double bessel_j(int ell, double x) {
  const int n = std::abs(ell);
  const double j = std::cyl_bessel_j(static_cast<double>(n), x);
  return (ell < 0 && n % 2 == 1) ? -j : j;
}

inline ComplexField apply_dipole_phase(const ComplexField& field, const DipoleSpec& spec) {
  spec.validate();
  const double strength = spec.strength();
  return apply_phase(field, [&](double x, double y) {
    const double r = std::hypot(x, y);
    if (r == 0.0) return 0.0;
    return strength / std::max(r, spec.r_clamp) * (y / r);
  });
}

/// J_ell(chi)^2 normalized over [-ell_max, ell_max].
inline OamSpectrum analytic_dipole_spectrum(double chi_value, int ell_max) {
  if (!(chi_value >= 0.0)) throw InvalidArgument("chi must be >= 0");
  if (ell_max < 0) throw InvalidArgument("ell_max must be >= 0");
  OamSpectrum s = OamSpectrum::zeros(ell_max);
  for (int ell = -ell_max; ell <= ell_max; ++ell) {
    const double j = bessel_j(ell, chi_value);
    s.set(ell, j * j);
  }
  return s.normalized();
}

/// |int_{r0-sigma}^{r0+sigma} J_ell(chi(r)) dr|^2, normalized.
inline OamSpectrum windowed_coefficients(const DipoleSpec& spec, const RadialWindow& window, int ell_max) {
  spec.validate();
  window.validate();
  if (ell_max < 0) throw InvalidArgument("ell_max must be >= 0");
  OamSpectrum s = OamSpectrum::zeros(ell_max);
  const double lo = window.r0 - window.sigma, hi = window.r0 + window.sigma;
  for (int ell = -ell_max; ell <= ell_max; ++ell) {
    const double c = quadrature::integrate([&](double r) { return bessel_j(ell, chi(r, spec)); }, lo, hi);
    s.set(ell, c * c);
  }
  return s.normalized();
}

struct MomentEstimate {
  double moment = 0.0;       // Bohr magnetons
  double uncertainty = 0.0;  // Bohr magnetons
  double chi = 0.0;          // fitted chi at r_ref
  double fidelity = 0.0;     // of the spectrum against J_ell(chi)^2
  double mean_abs_ell = 0.0;
};

/// Fits chi by maximizing the Bhattacharyya fidelity between the spectrum and
/// J_ell(chi)^2 over the spectrum's ell range, then converts chi at r_ref to a
/// moment. The uncertainty is the spread of |ell| converted the same way.
inline MomentEstimate estimate_moment(const OamSpectrum& spectrum, double r_ref) {
  if (!(r_ref > 0.0)) throw InvalidArgument("reference radius must be positive");
  if (!(spectrum.total() > 0.0)) throw InvalidArgument("cannot estimate a moment from an all-zero spectrum");
  const OamSpectrum p = spectrum.normalized();

  auto model = [&](double x) {
    OamSpectrum q(p.ell_min(), std::vector<double>(p.size()));
    for (int ell = p.ell_min(); ell <= p.ell_max(); ++ell) {
      const double j = bessel_j(ell, x);
      q.set(ell, j * j);
    }
    return q.normalized();
  };
  auto score = [&](double x) { return spectrum_fidelity(p, model(x)); };

  // J_ell(x) is negligible for |ell| well above x, so the scan stops just past
  // the outermost populated bin.
  const double top = *std::max_element(p.weights().begin(), p.weights().end());
  int reach = 0;
  for (int ell = p.ell_min(); ell <= p.ell_max(); ++ell) {
    if (p[ell] >= 1e-4 * top) reach = std::max(reach, std::abs(ell));
  }
  const double step = 0.05;
  double best_x = 0.0, best = score(0.0);
  for (double x = step; x <= reach + 2.0; x += step) {
    const double s = score(x);
    if (s > best) {
      best = s;
      best_x = x;
    }
  }
  // Golden-section refinement inside the bracketing grid cell.
  double lo = std::max(0.0, best_x - step), hi = best_x + step;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double s1 = score(x1), s2 = score(x2);
  for (int it = 0; it < 60; ++it) {
    if (s1 < s2) {
      lo = x1;
      x1 = x2;
      s1 = s2;
      x2 = lo + g * (hi - lo);
      s2 = score(x2);
    } else {
      hi = x2;
      x2 = x1;
      s2 = s1;
      x1 = hi - g * (hi - lo);
      s1 = score(x1);
    }
  }
  const double x_mid = 0.5 * (lo + hi);
  if (score(x_mid) > best) {
    best_x = x_mid;
    best = score(x_mid);
  }

  double mean = 0.0, second = 0.0;
  for (int ell = p.ell_min(); ell <= p.ell_max(); ++ell) {
    mean += p[ell] * std::abs(ell);
    second += p[ell] * ell * ell;
  }
  const double spread = std::sqrt(std::max(0.0, second - mean * mean));

  MomentEstimate e;
  e.chi = best_x;
  e.fidelity = best;
  e.mean_abs_ell = mean;
  e.moment = DipoleSpec::moment_for_chi(best_x, r_ref);
  e.uncertainty = DipoleSpec::moment_for_chi(spread, r_ref);
  return e;
}

}  // namespace oamsort
