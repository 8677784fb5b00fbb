#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oamsort/dipole.hpp"
#include "oamsort/oracle.hpp"
#include "oamsort/quadrature.hpp"
#include "oamsort/sources.hpp"

using namespace oamsort;

namespace {

// e mu0 muB / h from the SI values, written out independently of the library.
constexpr double kLength = 1.602176634e-19 * 1.25663706212e-6 * 9.2740100783e-24 / 6.62607015e-34;

// Series J_n(x) = sum_k (-1)^k (x/2)^(2k+n) / (k! (k+n)!)
double bessel_series(int n, double x) {
  double term = std::pow(x / 2.0, n) / std::tgamma(n + 1.0), sum = term;
  for (int k = 1; k < 80; ++k) {
    term *= -(x / 2.0) * (x / 2.0) / (k * (k + n));
    sum += term;
  }
  return sum;
}

}  // namespace

TEST(Chi, ZeroMomentGivesZero) {
  const DipoleSpec d{0.0, 1e-9};
  for (double r : {1e-10, 1e-8, 1e-6}) EXPECT_EQ(chi(r, d), 0.0);
}

TEST(Chi, ScalesAsOneOverR) {
  const DipoleSpec d{1e9, 1e-9};
  EXPECT_NEAR(chi(2e-6, d), chi(1e-6, d) / 2.0, 1e-15);
  EXPECT_EQ(chi(1e-10, d), chi(1e-9, d));
}

TEST(Chi, PaperMomentGivesAboutFiveRadians) {
  EXPECT_NEAR(kLength, 2.82e-15, 0.01e-15);
  EXPECT_NEAR(constants::dipole_length_per_bohr_magneton, kLength, 1e-24);
  const double c = chi(3.49e-6, {6.2e9, 1e-9});
  EXPECT_NEAR(c, 5.0, 0.05);
  EXPECT_NEAR(c, kLength * 6.2e9 / 3.49e-6, 1e-12);
}

TEST(Chi, RejectsBadInput) {
  EXPECT_THROW(chi(0.0, {1.0, 1e-9}), InvalidArgument);
  EXPECT_THROW(chi(1.0, {-1.0, 1e-9}), InvalidArgument);
  EXPECT_THROW(chi(1.0, {1.0, 0.0}), InvalidArgument);
}

TEST(DipoleSpec, SampledClampKeepsThePhaseResolvable) {
  const GridSpec g(1024, 1024, 7.79e-9, 7.79e-9, 2e-12);
  const DipoleSpec d = DipoleSpec::sampled(6.2e9, g);
  // |d chi sin(phi) / dr| <= strength / r^2 must stay below pi / (2 pitch)
  EXPECT_LE(d.strength() / (d.r_clamp * d.r_clamp), std::numbers::pi / (2.0 * g.dx()) * (1 + 1e-12));
  EXPECT_GE(DipoleSpec::sampled(1.0, g).r_clamp, 2.0 * g.dx());
  EXPECT_NEAR(chi(3e-6, {DipoleSpec::moment_for_chi(5.0, 3e-6), 1e-9}), 5.0, 1e-12);
}

TEST(Bessel, MatchesSeriesAndNegativeOrders) {
  for (int n = 0; n <= 8; ++n) {
    for (double x : {0.3, 2.0, 5.0, 7.5}) {
      EXPECT_NEAR(bessel_j(n, x), bessel_series(n, x), 1e-12);
      EXPECT_NEAR(bessel_j(-n, x), (n % 2 ? -1.0 : 1.0) * bessel_series(n, x), 1e-12);
    }
  }
}

TEST(DipolePhase, ZeroMomentIsIdentityAndIntensityIsKept) {
  const GridSpec g(128, 128, 1e-8, 1e-8, 2e-12);
  const auto f = gaussian(g, 0.15e-6);
  const auto same = apply_dipole_phase(f, {0.0, 2e-8});
  for (std::size_t i = 0; i < f.samples().size(); ++i) ASSERT_EQ(same.samples()[i], f.samples()[i]);
  const auto out = apply_dipole_phase(f, DipoleSpec::sampled(DipoleSpec::moment_for_chi(5.0, 0.5e-6), g));
  const auto a = intensity(f), b = intensity(out);
  for (std::size_t i = 0; i < a.data.size(); ++i) ASSERT_NEAR(a.data[i], b.data[i], 1e-12 * a.max());
}

TEST(DipolePhase, RingSpectrumFollowsJacobiAnger) {
  // A thin ring sees a single chi, so its spectrum is J_ell(chi)^2.
  const GridSpec g(512, 512, 1e-8, 1e-8, 2e-12);
  const double r0 = 1.5e-6;
  const DipoleSpec d{DipoleSpec::moment_for_chi(4.0, r0), 1e-8};
  const auto beam = apply_dipole_phase(vortex(g, {0, RingProfile{r0, 0.02e-6}}), d);
  const auto oracle = azimuthal_decompose(beam, 20);
  EXPECT_GE(spectrum_fidelity(oracle, analytic_dipole_spectrum(4.0, 20)), 0.995);
}

TEST(DipolePhase, GaussianSpectrumMatchesIntensityWeightedPrediction) {
  const GridSpec g(1024, 1024, 7.79e-9, 7.79e-9, 1.9687e-12);
  const double r_max = 0.875 * g.half_extent(), w0 = 0.5 * r_max;
  const DipoleSpec d = DipoleSpec::sampled(DipoleSpec::moment_for_chi(5.0, r_max), g);
  const auto beam = apply_dipole_phase(gaussian(g, w0), d);
  const auto oracle = azimuthal_decompose(beam, 30);
  // Each radius contributes J_ell(chi(r))^2 in proportion to its share of the
  // intensity, 2 pi r |psi(r)|^2 dr.
  OamSpectrum predicted = OamSpectrum::zeros(30);
  for (int ell = -30; ell <= 30; ++ell) {
    predicted.set(ell, quadrature::integrate(
                           [&](double r) {
                             const double j = bessel_j(ell, chi(r, d));
                             return j * j * r * std::exp(-2.0 * r * r / (w0 * w0));
                           },
                           1e-12, 5.0 * w0));
  }
  EXPECT_GE(spectrum_fidelity(oracle, predicted.normalized()), 0.9);
}

TEST(AnalyticSpectrum, ZeroChiIsPureZero) {
  const auto s = analytic_dipole_spectrum(0.0, 10);
  EXPECT_DOUBLE_EQ(s[0], 1.0);
  EXPECT_THROW(analytic_dipole_spectrum(-1.0, 10), InvalidArgument);
}

TEST(AnalyticSpectrum, SymmetricAndPeakedNearChi) {
  const auto s = analytic_dipole_spectrum(5.0, 20);
  for (int ell = 1; ell <= 20; ++ell) EXPECT_NEAR(s[ell], s[-ell], 1e-15);
  const int top = std::abs(s.argmax());
  EXPECT_TRUE(top >= 3 && top <= 5) << top;
  EXPECT_NEAR(std::pow(bessel_series(4, 5.0), 2), 0.153, 0.001);
  // sum_ell J_ell^2 = 1, so normalization over +-20 barely changes the weights
  EXPECT_NEAR(s[4], std::pow(bessel_series(4, 5.0), 2), 1e-9);
}

TEST(Windowed, NarrowWindowReducesToTheBesselSpectrum) {
  const DipoleSpec d{DipoleSpec::moment_for_chi(5.0, 3e-6), 1e-9};
  const double r0 = 3e-6;
  const auto w = windowed_coefficients(d, {r0, r0 * 1e-4}, 15);
  const auto a = analytic_dipole_spectrum(chi(r0, d), 15);
  for (int ell = -15; ell <= 15; ++ell) EXPECT_NEAR(w[ell], a[ell], 1e-3) << "ell " << ell;
}

TEST(Windowed, HighOrdersVanishWhenChiIsSmall) {
  const DipoleSpec d{DipoleSpec::moment_for_chi(0.5, 3e-6), 1e-9};
  const auto w = windowed_coefficients(d, {3e-6, 0.5e-6}, 12);
  for (int ell = 3; ell <= 12; ++ell) {
    EXPECT_LT(w[ell], 1e-3);
    EXPECT_LT(w[-ell], 1e-3);
  }
}

TEST(Windowed, WideWindowIsBroaderThanItsCentre) {
  // chi(r) = 1/r in these units, window spans chi in [2, 8]
  const DipoleSpec d{DipoleSpec::moment_for_chi(1.0, 1.0), 1e-3};
  const RadialWindow wide{(0.5 + 0.125) / 2.0, (0.5 - 0.125) / 2.0};
  const double h_wide = spectrum_entropy(windowed_coefficients(d, wide, 30));
  const double h_centre = spectrum_entropy(windowed_coefficients(d, {wide.r0, wide.r0 * 1e-4}, 30));
  EXPECT_GT(h_wide, h_centre);
}

TEST(Windowed, RejectsBadWindow) {
  EXPECT_THROW(windowed_coefficients({1.0, 1e-9}, {1e-6, 2e-6}, 5), InvalidArgument);
}

TEST(EstimateMoment, RoundTripFromBesselSpectrum) {
  const double r_ref = 3.49e-6;
  const double truth = DipoleSpec::moment_for_chi(5.0, r_ref);
  const MomentEstimate e = estimate_moment(analytic_dipole_spectrum(5.0, 20), r_ref);
  EXPECT_NEAR(e.moment / truth, 1.0, 0.15);
  EXPECT_NEAR(e.chi, 5.0, 0.01);
  EXPECT_GT(e.fidelity, 0.9999);
  EXPECT_GT(e.uncertainty, 0.0);
}

TEST(EstimateMoment, ZeroOamMeansNoMoment) {
  EXPECT_EQ(estimate_moment(OamSpectrum(0, {1.0}), 1e-6).moment, 0.0);
  EXPECT_THROW(estimate_moment(OamSpectrum::zeros(3), 1e-6), InvalidArgument);
}

TEST(EstimateMoment, MeanAbsEllRuleUnderestimates) {
  // The plain |ell| average is reported alongside; it sits well below chi.
  const MomentEstimate e = estimate_moment(analytic_dipole_spectrum(5.0, 20), 1e-6);
  EXPECT_LT(e.mean_abs_ell, 0.85 * 5.0);
}
