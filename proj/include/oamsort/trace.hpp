#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "oamsort/error.hpp"

namespace oamsort {

/// Linear map from detector position (pixels) to OAM: ell = (p - offset) / scale.
struct Calibration {
  double scale = 1.0;   // pixels per unit of ell
  double offset = 0.0;  // pixel position of ell = 0
  double r_squared = 1.0;

  double ell_at(double position) const { return (position - offset) / scale; }
  double position_of(double ell) const { return offset + scale * ell; }
};

/// One-dimensional marginal of the detector image along the dispersion axis.
struct DetectorTrace {
  std::vector<double> positions;  // pixels, strictly increasing
  std::vector<double> counts;
  std::optional<Calibration> calibration;

  std::size_t size() const { return counts.size(); }

  void validate() const {
    if (positions.size() != counts.size()) throw InvalidArgument("trace positions and counts differ in length");
    for (std::size_t i = 1; i < positions.size(); ++i) {
      if (!(positions[i] > positions[i - 1])) throw InvalidArgument("trace positions must be strictly increasing");
    }
    for (double c : counts) {
      if (!std::isfinite(c)) throw NumericError("non-finite trace count");
    }
    if (calibration && !(std::abs(calibration->scale) > 0.0)) {
      throw InvalidArgument("calibration scale must be non-zero");
    }
  }

  double total() const {
    double s = 0.0;
    for (double c : counts) s += c;
    return s;
  }

  /// Position in calibrated ell units; requires a calibration.
  double ell_at(std::size_t i) const {
    if (!calibration) throw InvalidArgument("trace carries no calibration");
    return calibration->ell_at(positions[i]);
  }

  DetectorTrace with_counts(std::vector<double> new_counts) const {
    DetectorTrace t{positions, std::move(new_counts), calibration};
    return t;
  }
};

}  // namespace oamsort
