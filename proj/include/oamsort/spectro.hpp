#pragma once

// Turning a raw detector trace into a calibrated OAM spectrum: polynomial
// background removal, clipping, maximum-entropy deconvolution with the
// zero-OAM response, bin-offset search and binning.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "oamsort/peaks.hpp"
#include "oamsort/spectrum.hpp"
#include "oamsort/trace.hpp"

namespace oamsort {

// Uniform: one robust noise level for the whole trace. Poisson: the trace holds
// raw counts, so each sample's variance is its own count before background removal.
enum class NoiseModel { Uniform, Poisson };

struct ProcessingConfig {
  int background_poly_order = 3;
  int mem_iterations = 20000;
  double mem_tolerance = 1.0;      // chi^2 per point
  double mem_noise_floor = 2e-4;   // noise never below this fraction of the trace maximum
  double bin_offset_search = 0.5;  // half-range, ell units
  bool clip_negatives = true;
  double psf_half_width = 3.0;     // ell units
  NoiseModel noise_model = NoiseModel::Uniform;

  void validate() const {
    if (background_poly_order < 0) throw InvalidArgument("background polynomial order must be >= 0");
    if (mem_iterations < 1) throw InvalidArgument("MEM iteration count must be >= 1");
    if (!(mem_tolerance > 0.0)) throw InvalidArgument("MEM tolerance must be positive");
    if (!(mem_noise_floor > 0.0)) throw InvalidArgument("MEM noise floor must be positive");
    if (!(bin_offset_search >= 0.0 && bin_offset_search <= 0.5)) {
      throw InvalidArgument("bin offset search half-range must lie in [0, 0.5]");
    }
    if (!(psf_half_width > 0.0)) throw InvalidArgument("PSF half-width must be positive");
  }
};

struct PointSpreadFunction {
  std::vector<double> kernel;
  std::size_t origin = 0;

  void validate() const {
    if (kernel.empty() || origin >= kernel.size()) throw InvalidArgument("PSF kernel is empty or its origin lies outside");
    double sum = 0.0;
    for (double k : kernel) {
      if (!(k >= 0.0)) throw InvalidArgument("PSF kernel must be non-negative");
      sum += k;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("PSF kernel must sum to 1");
  }

  static PointSpreadFunction delta() { return {{1.0}, 0}; }
};

/// Least-squares polynomial background with iterative exclusion of points
/// lying more than two robust standard deviations above the current fit.
inline DetectorTrace subtract_background(const DetectorTrace& trace, int order) {
  trace.validate();
  if (order < 0) throw InvalidArgument("background polynomial order must be >= 0");
  const std::size_t n = trace.size();
  if (n <= 3 * static_cast<std::size_t>(order + 1)) {
    throw InvalidArgument("trace too short for a degree-" + std::to_string(order) + " background fit");
  }
  // Positions mapped to [-1, 1] keep the Vandermonde matrix well conditioned.
  const double x0 = trace.positions.front(), x1 = trace.positions.back();
  const double mid = 0.5 * (x0 + x1), half = std::max(0.5 * (x1 - x0), 1e-300);
  Eigen::MatrixXd basis(n, order + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (trace.positions[i] - mid) / half;
    double p = 1.0;
    for (int k = 0; k <= order; ++k, p *= t) basis(i, k) = p;
  }
  const Eigen::Map<const Eigen::VectorXd> y(trace.counts.data(), static_cast<Eigen::Index>(n));

  std::vector<bool> keep(n, true);
  Eigen::VectorXd fit = Eigen::VectorXd::Zero(n);
  for (int round = 0; round < 5; ++round) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < n; ++i) {
      if (keep[i]) rows.push_back(static_cast<Eigen::Index>(i));
    }
    if (rows.size() <= static_cast<std::size_t>(order + 1)) break;
    Eigen::MatrixXd A(rows.size(), order + 1);
    Eigen::VectorXd b(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      A.row(r) = basis.row(rows[r]);
      b(r) = y(rows[r]);
    }
    const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(b);
    fit = basis * coef;

    std::vector<double> residuals;
    for (auto r : rows) residuals.push_back(y(r) - fit(r));
    const double med = median(residuals);
    for (double& d : residuals) d = std::abs(d - med);
    const double sigma = 1.4826 * median(residuals);
    if (!(sigma > 0.0)) break;

    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const bool k = y(static_cast<Eigen::Index>(i)) - fit(static_cast<Eigen::Index>(i)) <= 2.0 * sigma;
      changed |= (k != keep[i]);
      keep[i] = k;
    }
    if (!changed) break;
  }

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = trace.counts[i] - fit(static_cast<Eigen::Index>(i));
  return trace.with_counts(std::move(out));
}

inline DetectorTrace clip_negative(const DetectorTrace& trace) {
  std::vector<double> c = trace.counts;
  for (double& v : c) v = std::max(v, 0.0);
  return trace.with_counts(std::move(c));
}

/// Zero-OAM response: the samples within +/- half_width (ell units) of the
/// dominant peak's centroid, clipped at zero and normalized to unit sum.
inline PointSpreadFunction build_psf(const DetectorTrace& zero_oam, double pixels_per_ell,
                                     double half_width = 3.0) {
  zero_oam.validate();
  if (!(std::abs(pixels_per_ell) > 0.0) || !(half_width > 0.0)) {
    throw InvalidArgument("PSF extraction needs a non-zero dispersion and positive half-width");
  }
  const auto& c = zero_oam.counts;
  if (c.empty()) throw InvalidArgument("empty reference trace");
  const double top = *std::max_element(c.begin(), c.end());
  if (!(top > 5.0 * robust_noise(c)) || !(top > 0.0)) {
    throw NumericError("no detectable peak in the zero-OAM reference");
  }
  const auto peaks = find_peaks(zero_oam, {5.0, 0.0});
  if (peaks.empty()) throw NumericError("no detectable peak in the zero-OAM reference");
  if (peaks.size() > 1 && peaks[1].height >= 0.5 * peaks[0].height) {
    throw InvalidArgument("ambiguous reference: more than one dominant peak");
  }

  const double centre = peaks[0].position;
  const double reach = half_width * std::abs(pixels_per_ell);
  std::size_t lo = c.size(), hi = 0, origin = peaks[0].index;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double d = zero_oam.positions[i] - centre;
    if (std::abs(d) <= reach) {
      lo = std::min(lo, i);
      hi = std::max(hi, i);
    }
    if (std::abs(d) < best) {
      best = std::abs(d);
      origin = i;
    }
  }
  if (lo > hi) lo = hi = origin;
  PointSpreadFunction psf;
  double sum = 0.0;
  for (std::size_t i = lo; i <= hi; ++i) {
    psf.kernel.push_back(std::max(c[i], 0.0));
    sum += psf.kernel.back();
  }
  if (!(sum > 0.0)) throw NumericError("zero-OAM reference has no positive samples near its peak");
  for (double& k : psf.kernel) k /= sum;
  psf.origin = origin - lo;
  return psf;
}

namespace detail {

/// (K f)_i = sum_j kernel[j] f[i + origin - j]: the output at i collects
/// input samples shifted by the kernel's offset from its origin.
inline std::vector<double> convolve(const std::vector<double>& f, const PointSpreadFunction& psf) {
  const long n = static_cast<long>(f.size());
  const long m = static_cast<long>(psf.kernel.size());
  const long o = static_cast<long>(psf.origin);
  std::vector<double> out(f.size(), 0.0);
  for (long i = 0; i < n; ++i) {
    double s = 0.0;
    for (long j = 0; j < m; ++j) {
      const long k = i - (j - o);
      if (k >= 0 && k < n) s += psf.kernel[j] * f[k];
    }
    out[i] = s;
  }
  return out;
}

/// Adjoint of convolve.
inline std::vector<double> correlate(const std::vector<double>& g, const PointSpreadFunction& psf) {
  const long n = static_cast<long>(g.size());
  const long m = static_cast<long>(psf.kernel.size());
  const long o = static_cast<long>(psf.origin);
  std::vector<double> out(g.size(), 0.0);
  for (long k = 0; k < n; ++k) {
    double s = 0.0;
    for (long j = 0; j < m; ++j) {
      const long i = k + (j - o);
      if (i >= 0 && i < n) s += psf.kernel[j] * g[i];
    }
    out[k] = s;
  }
  return out;
}

}  // namespace detail

struct MemResult {
  DetectorTrace trace;
  bool converged = false;
  int iterations = 0;
  double chi2_per_point = 0.0;
  double sigma = 0.0;  // rms of the per-sample noise
  std::vector<double> chi2_history;  // one entry per accepted step
};

/// Maximum-entropy deconvolution with a flat prior. Starting from the prior,
/// the estimate follows the entropic (multiplicative) gradient flow of chi^2,
///   ln f <- ln f - eta * K^T (K f - d) / sigma^2,
/// and stops at the first iterate meeting chi^2 / N <= tolerance, which keeps
/// it as close to the prior in relative entropy as the data allow. The flow is
/// accelerated with momentum in ln f, restarted whenever it stops paying off.
/// A step is only taken if chi^2 does not increase; rejected steps shrink eta
/// by 0.7 and accepted ones grow it by 1/0.7. Without `variance`, sigma is the
/// robust noise estimate; either way it is floored at mem_noise_floor times
/// the trace maximum.
inline MemResult mem_deconvolve(const DetectorTrace& trace, const PointSpreadFunction& psf,
                                const ProcessingConfig& config = {}, std::span<const double> variance = {}) {
  trace.validate();
  psf.validate();
  config.validate();
  if (!variance.empty() && variance.size() != trace.size()) {
    throw InvalidArgument("MEM variance has " + std::to_string(variance.size()) + " samples, trace has " +
                          std::to_string(trace.size()));
  }
  MemResult res;
  std::vector<double> d = trace.counts;
  if (config.clip_negatives) {
    for (double& v : d) v = std::max(v, 0.0);
  }
  const std::size_t n = d.size();
  double top = 0.0, total = 0.0;
  for (double v : d) {
    top = std::max(top, std::abs(v));
    total += v;
  }
  if (n == 0 || top == 0.0) {
    res.trace = trace.with_counts(std::vector<double>(n, 0.0));
    res.converged = true;
    return res;
  }
  if (psf.kernel.size() == 1) {
    res.trace = trace.with_counts(d);
    res.converged = true;
    return res;
  }

  const double floor_var = std::pow(config.mem_noise_floor * top, 2);
  const double uniform_var = variance.empty() ? std::pow(robust_noise(d), 2) : 0.0;
  std::vector<double> inv_var(n);
  double mean_var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = variance.empty() ? uniform_var : variance[i];
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("MEM variance must be finite and >= 0");
    const double var = std::max(v, floor_var);
    inv_var[i] = 1.0 / var;
    mean_var += var / static_cast<double>(n);
  }
  res.sigma = std::sqrt(mean_var);
  auto chi2_of = [&](const std::vector<double>& f) {
    const auto kf = detail::convolve(f, psf);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (kf[i] - d[i]) * (kf[i] - d[i]) * inv_var[i];
    return s;
  };
  auto gradient = [&](const std::vector<double>& f) {
    auto r = detail::convolve(f, psf);
    for (std::size_t i = 0; i < n; ++i) r[i] = (r[i] - d[i]) * inv_var[i];
    return detail::correlate(r, psf);
  };

  const double prior = std::max(total, top) / static_cast<double>(n);
  std::vector<double> z(n, std::log(prior)), z_prev = z, y(n), f(n, prior), trial(n), fy(n);
  double chi2 = chi2_of(f);
  double eta = 0.0;
  const double target = config.mem_tolerance * static_cast<double>(n);
  long momentum = 0;
  int it = 0;
  while (chi2 > target && it < config.mem_iterations) {
    ++it;
    const double beta = momentum > 0 ? static_cast<double>(momentum) / (momentum + 3.0) : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = z[i] + beta * (z[i] - z_prev[i]);
      fy[i] = std::exp(std::min(y[i], 700.0));
    }
    auto grad = gradient(fy);
    if (eta == 0.0) {
      double gmax = 0.0;
      for (double g : grad) gmax = std::max(gmax, std::abs(g));
      eta = gmax > 0.0 ? 1.0 / gmax : 1.0;
    }
    bool accepted = false;
    for (int shrink = 0; shrink < 60; ++shrink) {
      for (std::size_t i = 0; i < n; ++i) {
        trial[i] = std::exp(std::min(y[i] - std::clamp(eta * grad[i], -50.0, 50.0), 700.0));
      }
      const double c2 = chi2_of(trial);
      if (c2 <= chi2) {
        z_prev.swap(z);
        for (std::size_t i = 0; i < n; ++i) z[i] = std::log(std::max(trial[i], 1e-300));
        f.swap(trial);
        chi2 = c2;
        eta /= 0.7;
        ++momentum;
        accepted = true;
        break;
      }
      if (momentum > 0) {
        // Restart from the current iterate without momentum.
        momentum = 0;
        y = z;
        grad = gradient(f);
        continue;
      }
      eta *= 0.7;
    }
    if (!accepted) break;
    res.chi2_history.push_back(chi2);
  }
  res.iterations = it;
  res.chi2_per_point = chi2 / static_cast<double>(n);
  res.converged = chi2 <= target;
  res.trace = trace.with_counts(std::move(f));
  return res;
}

/// Unnormalized bin sums: bin ell collects positions whose calibrated value
/// lies in [ell - 0.5 + offset, ell + 0.5 + offset).
inline OamSpectrum bin_counts(const DetectorTrace& trace, double offset = 0.0) {
  trace.validate();
  if (!trace.calibration) throw InvalidArgument("binning requires a calibrated trace");
  if (trace.size() == 0) throw InvalidArgument("cannot bin an empty trace");
  std::vector<int> bins(trace.size());
  int lo = std::numeric_limits<int>::max(), hi = std::numeric_limits<int>::min();
  for (std::size_t i = 0; i < trace.size(); ++i) {
    bins[i] = static_cast<int>(std::floor(trace.ell_at(i) - offset + 0.5));
    lo = std::min(lo, bins[i]);
    hi = std::max(hi, bins[i]);
  }
  std::vector<double> w(static_cast<std::size_t>(hi - lo + 1), 0.0);
  for (std::size_t i = 0; i < trace.size(); ++i) w[bins[i] - lo] += std::max(trace.counts[i], 0.0);
  return OamSpectrum(lo, std::move(w));
}

inline OamSpectrum bin_spectrum(const DetectorTrace& trace, double offset = 0.0) {
  return bin_counts(trace, offset).normalized();
}

struct BinOffset {
  double offset = 0.0;
  double score = 0.0;
  std::size_t peaks = 0;
};

/// Grid search (step 0.01) for the offset that best centres the detected
/// peaks in their bins; the score is the sum over peaks of 0.5 minus the
/// distance (ell units) from the peak to its bin centre. Ties go to the
/// smallest |offset|.
inline BinOffset optimize_bin_offset(const DetectorTrace& trace, double half_range = 0.5,
                                     PeakOptions opt = {}) {
  trace.validate();
  if (!trace.calibration) throw InvalidArgument("bin offset search requires a calibrated trace");
  const auto peaks = find_peaks(trace, opt);
  std::vector<double> ells;
  for (const auto& p : peaks) ells.push_back(trace.calibration->ell_at(p.position));

  BinOffset best{0.0, -1.0, peaks.size()};
  const int steps = static_cast<int>(std::lround(half_range / 0.01));
  for (int k = -steps; k < std::max(steps, 1); ++k) {
    const double o = 0.01 * k;
    double score = 0.0;
    for (double e : ells) {
      const double t = e - o;
      score += 0.5 - std::abs(t - std::round(t));
    }
    const bool better = score > best.score + 1e-12 ||
                        (std::abs(score - best.score) <= 1e-12 && std::abs(o) < std::abs(best.offset));
    if (better) {
      best.offset = o;
      best.score = score;
    }
  }
  return best;
}

inline double crosstalk(const OamSpectrum& spectrum, const std::set<int>& intended) {
  if (intended.empty()) throw InvalidArgument("cross-talk needs at least one intended ell");
  if (!spectrum.is_normalized(1e-6)) throw InvalidArgument("cross-talk requires a normalized spectrum");
  double inside = 0.0;
  for (int ell : intended) inside += spectrum[ell];
  return std::clamp(1.0 - inside, 0.0, 1.0);
}

struct ProcessingReport {
  DetectorTrace background_subtracted;
  DetectorTrace clipped;
  MemResult mem;
  BinOffset offset;
  OamSpectrum spectrum;

  std::string to_text() const {
    std::ostringstream o;
    o.precision(10);
    o << "mem_converged = " << (mem.converged ? "true" : "false") << "\n"
      << "mem_iterations = " << mem.iterations << "\n"
      << "mem_chi2_per_point = " << mem.chi2_per_point << "\n"
      << "mem_sigma = " << mem.sigma << "\n"
      << "bin_offset = " << offset.offset << "\n"
      << "bin_offset_score = " << offset.score << "\n"
      << "bin_offset_peaks = " << offset.peaks << "\n"
      << "spectrum_ell_min = " << spectrum.ell_min() << "\n"
      << "spectrum_ell_max = " << spectrum.ell_max() << "\n";
    return o.str();
  }
};

/// background -> clip -> deconvolve -> bin-offset search -> bin. The
/// calibration is attached to the trace before any stage runs.
inline ProcessingReport process_trace(const DetectorTrace& raw, const Calibration& calibration,
                                      const PointSpreadFunction& psf, const ProcessingConfig& config = {}) {
  config.validate();
  DetectorTrace t = raw;
  t.calibration = calibration;
  ProcessingReport rep;
  rep.background_subtracted = subtract_background(t, config.background_poly_order);
  rep.clipped = config.clip_negatives ? clip_negative(rep.background_subtracted) : rep.background_subtracted;
  if (config.noise_model == NoiseModel::Poisson) {
    std::vector<double> variance(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) variance[i] = std::max(raw.counts[i], 1.0);
    rep.mem = mem_deconvolve(rep.clipped, psf, config, variance);
  } else {
    rep.mem = mem_deconvolve(rep.clipped, psf, config);
  }
  rep.offset = optimize_bin_offset(rep.mem.trace, config.bin_offset_search);
  rep.spectrum = bin_spectrum(rep.mem.trace, rep.offset.offset);
  return rep;
}

}  // namespace oamsort
