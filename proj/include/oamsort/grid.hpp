#pragma once

// Sampled complex scalar wavefunctions and the pointwise operations applied
// to them. Pixel (ix, iy) sits at x = (ix - nx/2) dx, y = (iy - ny/2) dy, so
// the origin is the centre of pixel (nx/2, ny/2); x grows with the column
// index and y with the row index. Azimuth is atan2(y, x) in (-pi, pi].

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "oamsort/error.hpp"

namespace oamsort {

using Complex = std::complex<double>;

class GridSpec {
 public:
  GridSpec(int nx, int ny, double dx, double dy, double wavelength)
      : nx_(nx), ny_(ny), dx_(dx), dy_(dy), wavelength_(wavelength) {
    auto pow2 = [](int n) { return n >= 16 && (n & (n - 1)) == 0; };
    if (!pow2(nx) || !pow2(ny)) {
      throw InvalidArgument("grid dimensions must be powers of two >= 16, got " +
                            std::to_string(nx) + "x" + std::to_string(ny));
    }
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(dx) || !positive(dy) || !positive(wavelength)) {
      throw InvalidArgument("pixel pitch and wavelength must be finite and positive");
    }
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double dx() const { return dx_; }
  double dy() const { return dy_; }
  double wavelength() const { return wavelength_; }

  std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }
  double pixel_area() const { return dx_ * dy_; }
  double x(int ix) const { return (ix - nx_ / 2) * dx_; }
  double y(int iy) const { return (iy - ny_ / 2) * dy_; }
  /// Smaller of the two half-widths of the sampled window.
  double half_extent() const { return 0.5 * std::min(nx_ * dx_, ny_ * dy_); }

  /// Same sampling, different wavelength or pitch, would break pointwise ops.
  bool compatible(const GridSpec& other) const {
    return nx_ == other.nx_ && ny_ == other.ny_ && dx_ == other.dx_ && dy_ == other.dy_ &&
           wavelength_ == other.wavelength_;
  }

  bool operator==(const GridSpec&) const = default;

 private:
  int nx_;
  int ny_;
  double dx_;
  double dy_;
  double wavelength_;
};

class ComplexField {
 public:
  /// Zero-valued field.
  explicit ComplexField(GridSpec grid) : grid_(grid), samples_(grid.size()) {}

  ComplexField(GridSpec grid, std::vector<Complex> samples)
      : grid_(grid), samples_(std::move(samples)) {
    if (samples_.size() != grid_.size()) {
      throw InvalidArgument("sample count does not match grid size");
    }
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      if (!std::isfinite(samples_[i].real()) || !std::isfinite(samples_[i].imag())) {
        throw NumericError("non-finite sample at index " + std::to_string(i));
      }
    }
  }

  const GridSpec& grid() const { return grid_; }
  std::span<const Complex> samples() const { return samples_; }
  std::span<Complex> samples() { return samples_; }

  Complex& at(int ix, int iy) { return samples_[index(ix, iy)]; }
  const Complex& at(int ix, int iy) const { return samples_[index(ix, iy)]; }

  /// Area-weighted squared L2 norm: sum |psi|^2 dx dy.
  double norm_squared() const {
    double sum = 0.0;
    for (const auto& s : samples_) sum += std::norm(s);
    return sum * grid_.pixel_area();
  }
  double norm() const { return std::sqrt(norm_squared()); }

 private:
  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * grid_.nx() + ix;
  }

  GridSpec grid_;
  std::vector<Complex> samples_;
};

/// Visit every pixel with its physical coordinates.
template <typename Fn>
void for_each_pixel(const GridSpec& grid, Fn&& fn) {
  for (int iy = 0; iy < grid.ny(); ++iy) {
    const double y = grid.y(iy);
    for (int ix = 0; ix < grid.nx(); ++ix) fn(ix, iy, grid.x(ix), y);
  }
}

/// Sample amplitude_fn at every pixel centre.
template <typename AmplitudeFn>
ComplexField make_field(const GridSpec& grid, AmplitudeFn&& amplitude_fn) {
  ComplexField field(grid);
  for_each_pixel(grid, [&](int ix, int iy, double x, double y) {
    const Complex value = amplitude_fn(x, y);
    if (!std::isfinite(value.real()) || !std::isfinite(value.imag())) {
      std::ostringstream msg;
      msg << "non-finite amplitude at pixel (" << ix << ", " << iy << ")";
      throw NumericError(msg.str());
    }
    field.at(ix, iy) = value;
  });
  if (field.norm_squared() <= 0.0) throw NumericError("zero-norm field");
  return field;
}

inline ComplexField normalize(const ComplexField& field) {
  const double n = field.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericError("cannot normalize a zero-norm field");
  ComplexField out = field;
  for (auto& s : out.samples()) s /= n;
  return out;
}

/// Multiply by exp(-absorption) * exp(i phase), pointwise.
inline ComplexField apply_phase(
    const ComplexField& field, const std::function<double(double, double)>& phase_fn,
    const std::function<double(double, double)>& absorption_fn = nullptr) {
  ComplexField out = field;
  for_each_pixel(field.grid(), [&](int ix, int iy, double x, double y) {
    const double phase = phase_fn(x, y);
    if (!std::isfinite(phase)) {
      std::ostringstream msg;
      msg << "non-finite phase at pixel (" << ix << ", " << iy << ")";
      throw NumericError(msg.str());
    }
    double amplitude = 1.0;
    if (absorption_fn) {
      const double a = absorption_fn(x, y);
      if (!(a >= 0.0)) throw InvalidArgument("absorption must be non-negative");
      amplitude = std::exp(-a);
    }
    out.at(ix, iy) *= std::polar(amplitude, phase);
  });
  return out;
}

struct ApertureSpec {
  double r_max = 0.0;
  /// Width of a raised-cosine roll-off ending at r_max; hard edge when empty.
  std::optional<double> soft_edge;

  /// Raised-cosine aperture with the default two-pixel roll-off.
  static ApertureSpec soft(double r_max, const GridSpec& grid) {
    return {r_max, 2.0 * std::max(grid.dx(), grid.dy())};
  }

  double transmission(double r) const {
    if (r > r_max) return 0.0;
    if (!soft_edge || *soft_edge <= 0.0) return 1.0;
    const double start = r_max - *soft_edge;
    if (r <= start) return 1.0;
    return 0.5 * (1.0 + std::cos(3.141592653589793 * (r - start) / *soft_edge));
  }
};

inline ComplexField apply_aperture(const ComplexField& field, const ApertureSpec& ap) {
  const GridSpec& g = field.grid();
  if (!(ap.r_max > 0.0)) throw InvalidArgument("aperture radius must be positive");
  if (ap.soft_edge && !(*ap.soft_edge >= 0.0)) {
    throw InvalidArgument("aperture soft-edge width must be non-negative");
  }
  if (ap.r_max >= g.half_extent() - std::max(g.dx(), g.dy())) {
    throw InvalidArgument("aperture radius does not fit inside the grid");
  }
  ComplexField out = field;
  for_each_pixel(g, [&](int ix, int iy, double x, double y) {
    out.at(ix, iy) *= ap.transmission(std::hypot(x, y));
  });
  return out;
}

/// Centred zero-padding to a larger power-of-two grid with the same pitch.
inline ComplexField pad_field(const ComplexField& field, int nx, int ny) {
  const GridSpec& g = field.grid();
  if (nx < g.nx() || ny < g.ny()) throw InvalidArgument("padding cannot shrink a field");
  ComplexField out(GridSpec(nx, ny, g.dx(), g.dy(), g.wavelength()));
  const int ox = nx / 2 - g.nx() / 2, oy = ny / 2 - g.ny() / 2;
  for (int iy = 0; iy < g.ny(); ++iy) {
    for (int ix = 0; ix < g.nx(); ++ix) out.at(ix + ox, iy + oy) = field.at(ix, iy);
  }
  return out;
}

/// Real-valued image on the same pixel layout as a field.
struct RealImage {
  int nx = 0;
  int ny = 0;
  std::vector<double> data;

  double at(int ix, int iy) const { return data[static_cast<std::size_t>(iy) * nx + ix]; }
  double& at(int ix, int iy) { return data[static_cast<std::size_t>(iy) * nx + ix]; }
  double sum() const {
    double s = 0.0;
    for (double v : data) s += v;
    return s;
  }
  double max() const { return data.empty() ? 0.0 : *std::max_element(data.begin(), data.end()); }
};

/// Detected probability per pixel, |psi|^2 dx dy; sums to the field's norm^2.
inline RealImage intensity(const ComplexField& field) {
  const GridSpec& g = field.grid();
  RealImage img{g.nx(), g.ny(), std::vector<double>(g.size())};
  const double area = g.pixel_area();
  auto s = field.samples();
  for (std::size_t i = 0; i < s.size(); ++i) img.data[i] = std::norm(s[i]) * area;
  return img;
}

}  // namespace oamsort
