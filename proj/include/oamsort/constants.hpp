#pragma once

// CODATA 2018 values. All magnetic moments in the library are expressed in
// Bohr magnetons.

namespace oamsort::constants {

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr double two_pi = 2.0 * pi;

inline constexpr double elementary_charge = 1.602176634e-19;  // C (exact)
inline constexpr double planck = 6.62607015e-34;              // J s (exact)
inline constexpr double vacuum_permeability = 1.25663706212e-6;  // N A^-2
inline constexpr double bohr_magneton = 9.2740100783e-24;     // J T^-1

/// e * mu0 * muB / h, in meters: the dipole phase at radius r is this value
/// times the moment (in muB) divided by r.
inline constexpr double dipole_length_per_bohr_magneton =
    elementary_charge * vacuum_permeability * bohr_magneton / planck;

/// Electron de Broglie wavelength at 300 kV (relativistic), meters.
inline constexpr double electron_wavelength_300kV = 1.9687e-12;

}  // namespace oamsort::constants
