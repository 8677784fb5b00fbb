#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature for real or complex
// integrands.

#include <array>
#include <cmath>
#include <complex>
#include <queue>
#include <type_traits>
#include <vector>

namespace oamsort::quadrature {

namespace detail {

inline constexpr std::array<double, 8> kronrod_nodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kronrod_weights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
inline constexpr std::array<double, 4> gauss_weights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename T>
double magnitude(const T& v) {
  return std::abs(v);
}

template <typename T>
struct Segment {
  double a;
  double b;
  T value;
  double error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <typename T, typename Fn>
Segment<T> gauss_kronrod(Fn& fn, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  T kronrod = fn(center) * kronrod_weights[7];
  T gauss = fn(center) * gauss_weights[3];
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kronrod_nodes[i];
    const T sum = fn(center - dx) + fn(center + dx);
    kronrod += sum * kronrod_weights[i];
    if (i % 2 == 1) gauss += sum * gauss_weights[i / 2];
  }
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, magnitude(kronrod - gauss)};
}

}  // namespace detail

struct Options {
  double abs_tol = 1e-13;
  double rel_tol = 1e-12;
  int max_segments = 2000;
};

/// Integral of fn over [a, b]; fn returns double or std::complex<double>.
template <typename Fn>
auto integrate(Fn&& fn, double a, double b, Options opt = {}) {
  using T = std::decay_t<decltype(fn(a))>;
  if (a == b) return T{};
  std::priority_queue<detail::Segment<T>> queue;
  auto first = detail::gauss_kronrod<T>(fn, a, b);
  T total = first.value;
  double error = first.error;
  queue.push(first);
  int segments = 1;
  while (error > std::max(opt.abs_tol, opt.rel_tol * detail::magnitude(total)) &&
         segments < opt.max_segments) {
    const auto worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    auto left = detail::gauss_kronrod<T>(fn, worst.a, mid);
    auto right = detail::gauss_kronrod<T>(fn, mid, worst.b);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    queue.push(left);
    queue.push(right);
    ++segments;
  }
  return total;
}

/// Integral over [a, b] split at the given interior breakpoints, so that
/// piecewise-smooth integrands are only ever integrated over smooth pieces.
template <typename Fn>
auto integrate_piecewise(Fn&& fn, const std::vector<double>& breakpoints, Options opt = {}) {
  using T = std::decay_t<decltype(fn(0.0))>;
  T total{};
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    total += integrate(fn, breakpoints[i], breakpoints[i + 1], opt);
  }
  return total;
}

}  // namespace oamsort::quadrature
