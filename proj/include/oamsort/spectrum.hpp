#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "oamsort/error.hpp"

namespace oamsort {

/// Discrete OAM distribution: weights[i] belongs to ell = ell_min + i.
class OamSpectrum {
 public:
  OamSpectrum() = default;
  OamSpectrum(int ell_min, std::vector<double> weights)
      : ell_min_(ell_min), weights_(std::move(weights)) {
    for (double w : weights_) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("spectrum weights must be finite and >= 0");
    }
  }

  /// Symmetric range [-ell_max, ell_max], all zero.
  static OamSpectrum zeros(int ell_max) {
    return OamSpectrum(-ell_max, std::vector<double>(2 * ell_max + 1, 0.0));
  }

  int ell_min() const { return ell_min_; }
  int ell_max() const { return ell_min_ + static_cast<int>(weights_.size()) - 1; }
  std::size_t size() const { return weights_.size(); }
  bool empty() const { return weights_.empty(); }
  const std::vector<double>& weights() const { return weights_; }

  bool contains(int ell) const { return ell >= ell_min_ && ell <= ell_max(); }
  double operator[](int ell) const { return contains(ell) ? weights_[ell - ell_min_] : 0.0; }
  void set(int ell, double w) {
    if (!contains(ell)) throw InvalidArgument("ell outside spectrum range");
    if (!(w >= 0.0)) throw InvalidArgument("spectrum weights must be >= 0");
    weights_[ell - ell_min_] = w;
  }

  double total() const {
    double s = 0.0;
    for (double w : weights_) s += w;
    return s;
  }

  bool is_normalized(double tol = 1e-9) const { return std::abs(total() - 1.0) <= tol; }

  OamSpectrum normalized() const {
    const double t = total();
    if (!(t > 0.0)) throw NumericError("cannot normalize an all-zero spectrum");
    OamSpectrum out = *this;
    for (double& w : out.weights_) w /= t;
    return out;
  }

  /// Ell carrying the largest weight (smallest |ell| on ties).
  int argmax() const {
    int best = ell_min_;
    for (int ell = ell_min_; ell <= ell_max(); ++ell) {
      const double w = (*this)[ell], b = (*this)[best];
      if (w > b || (w == b && std::abs(ell) < std::abs(best))) best = ell;
    }
    return best;
  }

 private:
  int ell_min_ = 0;
  std::vector<double> weights_;
};

/// Bhattacharyya coefficient over the overlapping ell range.
inline double spectrum_fidelity(const OamSpectrum& p, const OamSpectrum& q) {
  if (!p.is_normalized(1e-6) || !q.is_normalized(1e-6)) {
    throw InvalidArgument("spectrum_fidelity requires normalized spectra");
  }
  const int lo = std::max(p.ell_min(), q.ell_min());
  const int hi = std::min(p.ell_max(), q.ell_max());
  if (lo > hi) throw InvalidArgument("spectra have no overlapping ell range");
  double f = 0.0;
  for (int ell = lo; ell <= hi; ++ell) f += std::sqrt(p[ell] * q[ell]);
  return std::min(f, 1.0);
}

/// Shannon entropy (nats) of a normalized spectrum.
inline double spectrum_entropy(const OamSpectrum& p) {
  double s = 0.0;
  for (double w : p.weights()) {
    if (w > 0.0) s -= w * std::log(w);
  }
  return s;
}

}  // namespace oamsort
