#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oamsort/propagation.hpp"
#include "oamsort/sources.hpp"

using namespace oamsort;

namespace {

struct Moments {
  double cx = 0, cy = 0, r2 = 0;
};

// Intensity centroid and <r^2> about it, in physical units.
Moments moments(const ComplexField& f) {
  const GridSpec& g = f.grid();
  Moments m;
  double s = 0;
  for (int iy = 0; iy < g.ny(); ++iy) {
    for (int ix = 0; ix < g.nx(); ++ix) {
      const double w = std::norm(f.at(ix, iy));
      s += w;
      m.cx += w * g.x(ix);
      m.cy += w * g.y(iy);
    }
  }
  m.cx /= s;
  m.cy /= s;
  for (int iy = 0; iy < g.ny(); ++iy) {
    for (int ix = 0; ix < g.nx(); ++ix) {
      const double dx = g.x(ix) - m.cx, dy = g.y(iy) - m.cy;
      m.r2 += std::norm(f.at(ix, iy)) * (dx * dx + dy * dy);
    }
  }
  m.r2 /= s;
  return m;
}

double max_abs_diff(const ComplexField& a, const ComplexField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.samples().size(); ++i) m = std::max(m, std::abs(a.samples()[i] - b.samples()[i]));
  return m;
}

// A field with structure at many spatial frequencies.
ComplexField textured(const GridSpec& g) {
  const double w = 0.2 * g.half_extent();
  return normalize(make_field(g, [&](double x, double y) {
    const double r2 = (x * x + y * y) / (w * w);
    return std::polar(std::exp(-r2), 7.0 * x / w + 3.0 * std::sin(5.0 * y / w));
  }));
}

}  // namespace

TEST(Propagate, ZeroDistanceIsIdentity) {
  const GridSpec g(128, 128, 1e-6, 1e-6, 0.5e-6);
  const auto f = textured(g);
  EXPECT_LT(max_abs_diff(propagate(f, 0.0), f), 1e-14);
}

TEST(Propagate, GaussianWidthFollowsBeamFormula) {
  const GridSpec g(256, 256, 1e-6, 1e-6, 0.5e-6);
  const double w0 = 8e-6;
  const auto f = gaussian(g, w0);
  const double zr = std::numbers::pi * w0 * w0 / g.wavelength();
  for (double z : {0.5 * zr, zr}) {
    const double w = w0 * std::sqrt(1.0 + std::pow(z / zr, 2));
    // intensity exp(-2 r^2 / w^2) has <r^2> = w^2 / 2
    const double measured = std::sqrt(2.0 * moments(propagate(f, z)).r2);
    EXPECT_NEAR(measured / w, 1.0, 0.01) << "z = " << z;
  }
}

TEST(Propagate, ConservesNormOn512Grid) {
  const GridSpec g(512, 512, 1e-6, 1e-6, 0.5e-6);
  const auto f = textured(g);
  const double z = 0.5 * g.nx() * g.dx() * g.dx() / g.wavelength();
  EXPECT_NEAR(propagate(f, z).norm_squared() / f.norm_squared(), 1.0, 1e-10);
}

TEST(Propagate, RoundTripRecoversInput) {
  const GridSpec g(256, 256, 1e-6, 1e-6, 0.5e-6);
  const auto f = textured(g);
  const double z = 0.5 * g.nx() * g.dx() * g.dx() / g.wavelength();
  double peak = 0.0;
  for (const auto& s : f.samples()) peak = std::max(peak, std::abs(s));
  EXPECT_LT(max_abs_diff(propagate(propagate(f, z), -z), f) / peak, 1e-8);
}

TEST(Propagate, RejectsNonFiniteDistance) {
  const GridSpec g(64, 64, 1e-6, 1e-6, 0.5e-6);
  EXPECT_THROW(propagate(gaussian(g, 5e-6), INFINITY), InvalidArgument);
}

TEST(FocalPlane, ConservesNormAndPitch) {
  const GridSpec g(256, 128, 1e-6, 2e-6, 0.5e-6);
  const auto f = textured(g);
  const double focal = 0.1;
  const auto out = to_focal_plane(f, focal);
  EXPECT_NEAR(out.norm_squared(), f.norm_squared(), 1e-10);
  EXPECT_NEAR(out.grid().dx(), g.wavelength() * focal / (256 * 1e-6), 1e-18);
  EXPECT_NEAR(out.grid().dy(), g.wavelength() * focal / (128 * 2e-6), 1e-18);
  EXPECT_THROW(to_focal_plane(f, 0.0), InvalidArgument);
}

TEST(FocalPlane, CentredGaussianStaysACentredGaussian) {
  const GridSpec g(256, 256, 1e-6, 1e-6, 0.5e-6);
  const double w0 = 12e-6;
  const double focal = g.nx() * g.dx() * g.dx() / g.wavelength();
  const auto out = to_focal_plane(gaussian(g, w0), focal);
  const Moments m = moments(out);
  EXPECT_LT(std::abs(m.cx), 1e-3 * out.grid().dx());
  EXPECT_LT(std::abs(m.cy), 1e-3 * out.grid().dy());
  // Fourier pair: waist lambda f / (pi w0)
  const double w_out = g.wavelength() * focal / (std::numbers::pi * w0);
  EXPECT_NEAR(std::sqrt(2.0 * m.r2) / w_out, 1.0, 1e-3);
  // the output is a real Gaussian up to a global phase
  const Complex centre = out.at(128, 128);
  EXPECT_NEAR(std::arg(out.at(140, 120) / centre), 0.0, 1e-9);
}

TEST(FocalPlane, TiltDisplacesSpotByShiftTheorem) {
  const GridSpec g(256, 256, 1e-6, 1e-6, 0.5e-6);
  const double focal = 0.2;
  const auto base = gaussian(g, 30e-6);
  const double out_pitch = g.wavelength() * focal / (g.ny() * g.dy());
  auto displacement = [&](double kv) {
    const auto tilted = apply_phase(base, [kv](double, double y) { return kv * y; });
    return moments(to_focal_plane(tilted, focal)).cy;
  };
  const double kv = 2.0 * std::numbers::pi * 10.3 / (g.ny() * g.dy());
  const double d1 = displacement(kv);
  EXPECT_NEAR(d1, focal * kv * g.wavelength() / (2.0 * std::numbers::pi), out_pitch);
  EXPECT_NEAR(displacement(2.0 * kv) / d1, 2.0, 0.1);
}
