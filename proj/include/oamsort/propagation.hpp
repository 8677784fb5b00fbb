#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "oamsort/constants.hpp"
#include "oamsort/fft.hpp"
#include "oamsort/grid.hpp"

namespace oamsort {

namespace detail {

inline double fft_frequency(int k, int n, double pitch) {
  const int signed_k = k < n / 2 ? k : k - n;
  return signed_k / (n * pitch);
}

}  // namespace detail

/// Free-space propagation by `distance` (negative values back-propagate)
/// with the band-limited angular-spectrum transfer function. The band limit
/// only bites for distances beyond nx*dx^2/lambda, where the sampled transfer
/// function would alias; below that the operator is exactly unitary.
inline ComplexField propagate(const ComplexField& field, double distance) {
  if (!std::isfinite(distance)) throw InvalidArgument("propagation distance must be finite");
  const GridSpec& g = field.grid();
  ComplexField out = field;
  if (distance == 0.0) return out;

  auto data = out.samples();
  fft::transform_2d(data, g.nx(), g.ny(), fft::Direction::Forward);

  const double lambda = g.wavelength();
  const double z = std::abs(distance);
  const double dfx = 1.0 / (g.nx() * g.dx());
  const double dfy = 1.0 / (g.ny() * g.dy());
  const double fx_limit = 1.0 / (lambda * std::sqrt(std::pow(2.0 * dfx * z, 2) + 1.0));
  const double fy_limit = 1.0 / (lambda * std::sqrt(std::pow(2.0 * dfy * z, 2) + 1.0));
  const double scale = 1.0 / static_cast<double>(g.size());

  for (int iy = 0; iy < g.ny(); ++iy) {
    const double fy = detail::fft_frequency(iy, g.ny(), g.dy());
    for (int ix = 0; ix < g.nx(); ++ix) {
      const double fx = detail::fft_frequency(ix, g.nx(), g.dx());
      Complex& s = out.at(ix, iy);
      const double f2 = fx * fx + fy * fy;
      const double cos2 = 1.0 - lambda * lambda * f2;
      if (std::abs(fx) > fx_limit || std::abs(fy) > fy_limit || cos2 <= 0.0) {
        s = 0.0;
        continue;
      }
      // kz - k, written to avoid cancellation: -2 pi lambda f^2 / (1 + sqrt(1 - lambda^2 f^2)).
      const double phase = -constants::two_pi * distance * lambda * f2 / (1.0 + std::sqrt(cos2));
      s *= std::polar(scale, phase);
    }
  }
  fft::transform_2d(data, g.nx(), g.ny(), fft::Direction::Backward);
  return out;
}

/// Field in the back focal plane of an ideal lens of focal length f, with the
/// input in the front focal plane: a centred, scaled Fourier transform. The
/// output pitch is lambda f / (n dx); the constant -i prefactor is dropped.
inline ComplexField to_focal_plane(const ComplexField& field, double focal_length) {
  if (!(focal_length > 0.0) || !std::isfinite(focal_length)) {
    throw InvalidArgument("focal length must be positive");
  }
  const GridSpec& g = field.grid();
  const double lambda = g.wavelength();
  const GridSpec out_grid(g.nx(), g.ny(), lambda * focal_length / (g.nx() * g.dx()),
                          lambda * focal_length / (g.ny() * g.dy()), lambda);

  // With the origin at index n/2 the centred DFT is a plain DFT sandwiched
  // between (-1)^index modulations (n is a multiple of four).
  std::vector<Complex> data(field.samples().begin(), field.samples().end());
  auto checkerboard = [&](double scale) {
    for (int iy = 0; iy < g.ny(); ++iy) {
      for (int ix = 0; ix < g.nx(); ++ix) {
        const double sign = ((ix + iy) & 1) ? -scale : scale;
        data[static_cast<std::size_t>(iy) * g.nx() + ix] *= sign;
      }
    }
  };
  checkerboard(1.0);
  fft::transform_2d(data, g.nx(), g.ny(), fft::Direction::Forward);
  const double unitary = 1.0 / std::sqrt(static_cast<double>(g.size()));
  checkerboard(unitary * std::sqrt(g.pixel_area() / out_grid.pixel_area()));
  return ComplexField(out_grid, std::move(data));
}

}  // namespace oamsort
