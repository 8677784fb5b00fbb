#pragma once

// Peak detection shared by calibration, PSF extraction and bin-offset
// optimisation. A peak is a local maximum exceeding both 5x the robust noise
// level and a fraction of the trace maximum.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "oamsort/trace.hpp"

namespace oamsort {

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), mid));
  }
  return m;
}

/// Gaussian-equivalent noise level from the median absolute deviation of
/// first differences, insensitive to smooth signal and isolated peaks.
inline double robust_noise(std::span<const double> values) {
  if (values.size() < 3) return 0.0;
  std::vector<double> diffs;
  diffs.reserve(values.size() - 1);
  for (std::size_t i = 1; i < values.size(); ++i) diffs.push_back(values[i] - values[i - 1]);
  const double med = median(diffs);
  for (double& d : diffs) d = std::abs(d - med);
  return 1.4826 * median(std::move(diffs)) / std::sqrt(2.0);
}

struct Peak {
  std::size_t index = 0;  // sample holding the maximum
  double position = 0.0;  // half-maximum-window centroid, in trace position units
  double height = 0.0;
  double fwhm = 0.0;      // in trace position units
};

struct PeakOptions {
  double noise_multiple = 5.0;
  double relative_threshold = 0.1;
};

inline Peak describe_peak(const DetectorTrace& trace, std::size_t i) {
  const auto& c = trace.counts;
  const auto& x = trace.positions;
  const double half = 0.5 * c[i];
  std::size_t lo = i, hi = i;
  while (lo > 0 && c[lo - 1] > half) --lo;
  while (hi + 1 < c.size() && c[hi + 1] > half) ++hi;
  double sum = 0.0, moment = 0.0;
  for (std::size_t k = lo; k <= hi; ++k) {
    sum += c[k];
    moment += c[k] * x[k];
  }
  // Linear interpolation of the half-maximum crossings.
  auto crossing = [&](std::size_t inside, std::size_t outside) {
    const double ci = c[inside], co = c[outside];
    if (ci == co) return x[inside];
    return x[inside] + (x[outside] - x[inside]) * (ci - half) / (ci - co);
  };
  const double left = lo > 0 ? crossing(lo, lo - 1) : x[lo];
  const double right = hi + 1 < c.size() ? crossing(hi, hi + 1) : x[hi];
  return {i, sum > 0.0 ? moment / sum : x[i], c[i], right - left};
}

/// Peaks sorted by decreasing height.
inline std::vector<Peak> find_peaks(const DetectorTrace& trace, PeakOptions opt = {}) {
  const auto& c = trace.counts;
  std::vector<Peak> peaks;
  if (c.size() < 3) return peaks;
  const double top = *std::max_element(c.begin(), c.end());
  if (!(top > 0.0)) return peaks;
  const double threshold =
      std::max(opt.noise_multiple * robust_noise(c), opt.relative_threshold * top);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const bool rises = i == 0 || c[i] > c[i - 1];
    const bool holds = i + 1 == c.size() || c[i] >= c[i + 1];
    if (rises && holds && c[i] > threshold && c[i] > 0.0) peaks.push_back(describe_peak(trace, i));
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const Peak& a, const Peak& b) { return a.height > b.height; });
  return peaks;
}

}  // namespace oamsort
