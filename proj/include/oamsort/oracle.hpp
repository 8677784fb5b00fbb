#pragma once

// Ground-truth OAM content of a sampled field by direct azimuthal Fourier
// analysis on a polar resampling of the grid.

#include <cmath>
#include <complex>
#include <vector>

#include "oamsort/constants.hpp"
#include "oamsort/fft.hpp"
#include "oamsort/grid.hpp"
#include "oamsort/spectrum.hpp"

namespace oamsort {

struct OracleConfig {
  int n_rings = 0;      // 0: nx/2
  int n_azimuth = 0;    // 0: 4*nx
  double r_max = 0.0;   // 0: half extent minus one pixel
};

/// Per-ring azimuthal coefficients c_ell(r) = (1/2pi) oint psi(r,phi) e^{-i ell phi} dphi.
struct RingCoefficients {
  int ell_max = 0;
  std::vector<double> radii;
  /// coefficients[ring][ell + ell_max]
  std::vector<std::vector<Complex>> coefficients;
  /// 2pi int sum_{all ell} |c_ell(r)|^2 r dr, i.e. the norm^2 seen by the
  /// polar resampling.
  double total_weight = 0.0;

  Complex at(std::size_t ring, int ell) const { return coefficients[ring][ell + ell_max]; }
};

namespace detail {

inline Complex bilinear(const ComplexField& field, double x, double y) {
  const GridSpec& g = field.grid();
  const double fx = x / g.dx() + g.nx() / 2;
  const double fy = y / g.dy() + g.ny() / 2;
  const int ix = static_cast<int>(std::floor(fx));
  const int iy = static_cast<int>(std::floor(fy));
  const double tx = fx - ix, ty = fy - iy;
  auto sample = [&](int cx, int cy) -> Complex {
    if (cx < 0 || cy < 0 || cx >= g.nx() || cy >= g.ny()) return 0.0;
    return field.at(cx, cy);
  };
  return (1 - tx) * (1 - ty) * sample(ix, iy) + tx * (1 - ty) * sample(ix + 1, iy) +
         (1 - tx) * ty * sample(ix, iy + 1) + tx * ty * sample(ix + 1, iy + 1);
}

}  // namespace detail

inline RingCoefficients azimuthal_coefficients(const ComplexField& field, int ell_max,
                                               OracleConfig cfg = {}) {
  const GridSpec& g = field.grid();
  const int n_rings = cfg.n_rings > 0 ? cfg.n_rings : g.nx() / 2;
  const int n_phi = cfg.n_azimuth > 0 ? cfg.n_azimuth : 4 * g.nx();
  const double pixel = std::max(g.dx(), g.dy());
  const double r_max = cfg.r_max > 0.0 ? cfg.r_max : g.half_extent() - pixel;
  if (ell_max < 0 || 4 * ell_max > n_phi) {
    throw InvalidArgument("ell_max exceeds the azimuthal sampling limit n_azimuth/4");
  }

  RingCoefficients out;
  out.ell_max = ell_max;
  const double dr = r_max / n_rings;
  std::vector<Complex> ring(n_phi);
  std::vector<double> ring_power;
  for (int i = 1; i <= n_rings; ++i) {
    const double r = i * dr;
    if (r < pixel) continue;  // innermost rings are dominated by interpolation error
    for (int k = 0; k < n_phi; ++k) {
      const double phi = constants::two_pi * k / n_phi;
      ring[k] = detail::bilinear(field, r * std::cos(phi), r * std::sin(phi));
    }
    fft::transform_1d(ring, fft::Direction::Forward);
    std::vector<Complex> c(2 * ell_max + 1);
    double power = 0.0;
    for (int k = 0; k < n_phi; ++k) power += std::norm(ring[k]);
    for (int ell = -ell_max; ell <= ell_max; ++ell) {
      c[ell + ell_max] = ring[(ell + n_phi) % n_phi] / static_cast<double>(n_phi);
    }
    out.radii.push_back(r);
    out.coefficients.push_back(std::move(c));
    ring_power.push_back(power / (static_cast<double>(n_phi) * n_phi));
  }

  // Trapezoid rule in r with the r dr measure.
  for (std::size_t i = 0; i + 1 < out.radii.size(); ++i) {
    const double h = out.radii[i + 1] - out.radii[i];
    out.total_weight += constants::two_pi * 0.5 * h *
                        (ring_power[i] * out.radii[i] + ring_power[i + 1] * out.radii[i + 1]);
  }
  return out;
}

/// Unnormalized per-ell weights 2pi int |c_ell(r)|^2 r dr.
inline OamSpectrum oracle_weights(const RingCoefficients& rc) {
  OamSpectrum s = OamSpectrum::zeros(rc.ell_max);
  for (int ell = -rc.ell_max; ell <= rc.ell_max; ++ell) {
    double w = 0.0;
    for (std::size_t i = 0; i + 1 < rc.radii.size(); ++i) {
      const double h = rc.radii[i + 1] - rc.radii[i];
      w += 0.5 * h *
           (std::norm(rc.at(i, ell)) * rc.radii[i] + std::norm(rc.at(i + 1, ell)) * rc.radii[i + 1]);
    }
    s.set(ell, constants::two_pi * w);
  }
  return s;
}

/// Normalized OAM spectrum over [-ell_max, ell_max].
inline OamSpectrum azimuthal_decompose(const ComplexField& field, int ell_max,
                                       OracleConfig cfg = {}) {
  return oracle_weights(azimuthal_coefficients(field, ell_max, cfg)).normalized();
}

/// Strongest non-constant angular harmonic of |psi|^2 on the circle of the
/// given radius: a pattern of k equal lobes returns k.
inline int dominant_intensity_harmonic(const ComplexField& field, double radius, int n_phi = 1024) {
  if (!(radius > 0.0) || n_phi < 8) throw InvalidArgument("harmonic analysis needs a positive radius and >= 8 samples");
  std::vector<Complex> ring(n_phi);
  for (int k = 0; k < n_phi; ++k) {
    const double phi = constants::two_pi * k / n_phi;
    ring[k] = std::norm(detail::bilinear(field, radius * std::cos(phi), radius * std::sin(phi)));
  }
  fft::transform_1d(ring, fft::Direction::Forward);
  int best = 1;
  for (int k = 2; k <= n_phi / 2; ++k) {
    if (std::abs(ring[k]) > std::abs(ring[best])) best = k;
  }
  return best;
}

}  // namespace oamsort
