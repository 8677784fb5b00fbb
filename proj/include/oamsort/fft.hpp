#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <span>
#include <tuple>

namespace oamsort::fft {

enum class Direction { Forward, Backward };

namespace detail {

struct PlanKey {
  int rows;
  int cols;
  int sign;
  int threads;
  auto operator<=>(const PlanKey&) const = default;
};

// FFTW's planner is not re-entrant; plans are created under the mutex and
// executed with the new-array interface, which is.
struct PlanCache {
  std::mutex mutex;
  std::map<PlanKey, fftw_plan> plans;
  int threads = 1;
  bool threads_initialized = false;

  ~PlanCache() {
    for (auto& entry : plans) fftw_destroy_plan(entry.second);
  }
};

inline PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

inline fftw_complex* as_fftw(std::span<std::complex<double>> data) {
  return reinterpret_cast<fftw_complex*>(data.data());
}

inline fftw_plan plan_for(int rows, int cols, Direction dir,
                          std::span<std::complex<double>> data) {
  auto& c = cache();
  std::lock_guard lock(c.mutex);
  const int sign = dir == Direction::Forward ? FFTW_FORWARD : FFTW_BACKWARD;
  const PlanKey key{rows, cols, sign, c.threads};
  if (auto it = c.plans.find(key); it != c.plans.end()) return it->second;
  if (c.threads_initialized) fftw_plan_with_nthreads(c.threads);
  // ESTIMATE keeps plan selection (and therefore rounding) deterministic.
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  fftw_plan plan =
      rows == 1 ? fftw_plan_dft_1d(cols, as_fftw(data), as_fftw(data), sign, flags)
                : fftw_plan_dft_2d(rows, cols, as_fftw(data), as_fftw(data), sign, flags);
  c.plans.emplace(key, plan);
  return plan;
}

}  // namespace detail

/// Number of threads used by subsequently planned transforms. With more than
/// one thread results agree to rounding, not bitwise.
inline void set_threads(int threads) {
  auto& c = detail::cache();
  std::lock_guard lock(c.mutex);
  if (threads < 1) threads = 1;
  if (threads > 1 && !c.threads_initialized) {
    fftw_init_threads();
    c.threads_initialized = true;
  }
  c.threads = threads;
}

/// Unnormalized in-place 2-D DFT of a row-major rows x cols array.
inline void transform_2d(std::span<std::complex<double>> data, int cols, int rows,
                         Direction dir) {
  fftw_plan plan = detail::plan_for(rows, cols, dir, data);
  fftw_execute_dft(plan, detail::as_fftw(data), detail::as_fftw(data));
}

/// Unnormalized in-place 1-D DFT.
inline void transform_1d(std::span<std::complex<double>> data, Direction dir) {
  const int n = static_cast<int>(data.size());
  fftw_plan plan = detail::plan_for(1, n, dir, data);
  fftw_execute_dft(plan, detail::as_fftw(data), detail::as_fftw(data));
}

}  // namespace oamsort::fft
