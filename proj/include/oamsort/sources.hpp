#pragma once

// Test wavefunctions: Gaussian, pure vortices, superpositions and beams shaped
// by azimuthal two-level or spiral phase masks.

#include <cmath>
#include <complex>
#include <cstdlib>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "oamsort/constants.hpp"
#include "oamsort/grid.hpp"
#include "oamsort/quadrature.hpp"
#include "oamsort/spectrum.hpp"

namespace oamsort {

inline ComplexField gaussian(const GridSpec& grid, double w0) {
  if (!(w0 > 0.0) || w0 >= 2.0 * grid.half_extent() / 4.0) {
    throw InvalidArgument("Gaussian waist must be positive and below a quarter of the grid extent");
  }
  return normalize(make_field(grid, [w0](double x, double y) -> Complex {
    return std::exp(-(x * x + y * y) / (w0 * w0));
  }));
}

struct RingProfile {
  double r0;
  double width;
};
struct GaussianProfile {
  double w0;
};
struct CustomProfile {
  std::function<double(double)> f;
};
using RadialProfile = std::variant<RingProfile, GaussianProfile, CustomProfile>;

/// Ring exp(-(r - r0)^2 / w^2) centred halfway to the aperture edge.
inline RingProfile default_ring(double r_max) { return {0.5 * r_max, 0.25 * r_max}; }

inline double radial_amplitude(const RadialProfile& profile, double r) {
  return std::visit(
      [r](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, RingProfile>) {
          const double t = (r - p.r0) / p.width;
          return std::exp(-t * t);
        } else if constexpr (std::is_same_v<P, GaussianProfile>) {
          return std::exp(-r * r / (p.w0 * p.w0));
        } else {
          return p.f(r);
        }
      },
      profile);
}

struct VortexSpec {
  int ell = 0;
  RadialProfile profile = RingProfile{1.0, 1.0};
};

/// Normalized f(r) exp(i ell phi). The on-axis pixel is zeroed for ell != 0,
/// where the phase is undefined.
inline ComplexField vortex(const GridSpec& grid, const VortexSpec& spec) {
  if (std::abs(spec.ell) > grid.nx() / 8) {
    throw InvalidArgument("|ell| = " + std::to_string(std::abs(spec.ell)) +
                          " exceeds the sampling limit nx/8");
  }
  return normalize(make_field(grid, [&](double x, double y) -> Complex {
    const double r = std::hypot(x, y);
    if (r == 0.0 && spec.ell != 0) return 0.0;
    return std::polar(radial_amplitude(spec.profile, r), spec.ell * std::atan2(y, x));
  }));
}

struct SuperpositionTerm {
  Complex coefficient;
  std::reference_wrapper<const ComplexField> field;
};

inline ComplexField superpose(std::span<const SuperpositionTerm> terms) {
  if (terms.empty()) throw InvalidArgument("superposition needs at least one term");
  const GridSpec& g = terms.front().field.get().grid();
  ComplexField out(g);
  for (const auto& t : terms) {
    const ComplexField& f = t.field.get();
    if (!f.grid().compatible(g)) throw InvalidArgument("superposed fields live on different grids");
    auto dst = out.samples();
    auto src = f.samples();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += t.coefficient * src[i];
  }
  return normalize(out);
}

inline ComplexField superpose(std::initializer_list<SuperpositionTerm> terms) {
  return superpose(std::span<const SuperpositionTerm>(terms.begin(), terms.size()));
}

enum class MaskKind { TwoLevel, Spiral };

struct MaskSpec {
  MaskKind kind = MaskKind::Spiral;
  int n = 1;
  double delta0 = constants::two_pi;
  double absorption = 0.0;  // two-level only

  void validate() const {
    if (n < 1) throw InvalidArgument("mask period count n must be >= 1");
    if (!(delta0 >= 0.0 && delta0 <= constants::two_pi)) {
      throw InvalidArgument("mask phase depth must lie in [0, 2pi]");
    }
    if (!(absorption >= 0.0)) throw InvalidArgument("mask absorption must be >= 0");
  }
};

/// Complex transmission at azimuth phi. Sector boundaries (n phi mod 2pi equal
/// to 0 or pi) belong to the unshifted branch.
inline Complex mask_transmission(const MaskSpec& mask, double phi) {
  const double t = std::fmod(mask.n * phi, constants::two_pi);
  const double m = t < 0.0 ? t + constants::two_pi : t;
  if (mask.kind == MaskKind::TwoLevel) {
    if (m <= constants::pi) return 1.0;
    return std::polar(std::exp(-mask.absorption), mask.delta0);
  }
  return std::polar(1.0, mask.delta0 * m / constants::two_pi);
}

inline ComplexField apply_mask(const ComplexField& field, const MaskSpec& mask) {
  mask.validate();
  ComplexField out = field;
  for_each_pixel(field.grid(), [&](int ix, int iy, double x, double y) {
    out.at(ix, iy) *= mask_transmission(mask, std::atan2(y, x));
  });
  return out;
}

/// Fourier coefficients c_ell = (1/2pi) int_0^{2pi} t(phi) e^{-i ell phi} dphi
/// by adaptive quadrature over each smooth sector of the mask.
inline std::vector<Complex> mask_coefficients(const MaskSpec& mask, int ell_max) {
  mask.validate();
  if (ell_max < 0 || ell_max > 64) throw InvalidArgument("mask spectrum range must satisfy 0 <= ell_max <= 64");
  const int pieces = mask.kind == MaskKind::TwoLevel ? 2 * mask.n : mask.n;
  std::vector<double> breaks;
  for (int k = 0; k <= pieces; ++k) breaks.push_back(constants::two_pi * k / pieces);

  std::vector<Complex> c(2 * ell_max + 1);
  for (int ell = -ell_max; ell <= ell_max; ++ell) {
    Complex sum = 0.0;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
      const double a = breaks[k], b = breaks[k + 1];
      if (mask.kind == MaskKind::TwoLevel) {
        // Constant transmission on the open sector; take it from the midpoint.
        const Complex level = mask_transmission(mask, 0.5 * (a + b));
        sum += quadrature::integrate(
            [&](double phi) { return level * std::polar(1.0, -ell * phi); }, a, b);
      } else {
        const double base = mask.n * a;  // n phi - base runs over [0, 2pi) on this sector
        sum += quadrature::integrate(
            [&](double phi) {
              return std::polar(1.0, mask.delta0 * (mask.n * phi - base) / constants::two_pi -
                                         ell * phi);
            },
            a, b);
      }
    }
    c[ell + ell_max] = sum / constants::two_pi;
  }
  return c;
}

/// |c_ell|^2 normalized over [-ell_max, ell_max].
inline OamSpectrum analytic_mask_spectrum(const MaskSpec& mask, int ell_max) {
  const auto c = mask_coefficients(mask, ell_max);
  OamSpectrum s = OamSpectrum::zeros(ell_max);
  for (int ell = -ell_max; ell <= ell_max; ++ell) s.set(ell, std::norm(c[ell + ell_max]));
  return s.normalized();
}

}  // namespace oamsort
