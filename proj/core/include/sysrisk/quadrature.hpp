#pragma once

// Globally adaptive Gauss-Kronrod (7/15) integration with an absolute
// tolerance, in the style of QUADPACK's QAG.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <vector>

namespace sysrisk::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
  std::size_t evaluations = 0;
};

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851, 0.864864423359769072789712788640926,
    0.741531185599394439863864773280788, 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204, 0.104790010322250183839876322541518,
    0.140653259715525918745189590510238, 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for the nodes kKronrodNodes[1], [3], [5], [7].
inline constexpr std::array<double, 4> kGaussWeights = {0.129484966168869693270611432679082,
                                                        0.279705391489276667901467771423780,
                                                        0.381830050505118944950369775488975,
                                                        0.417959183673469387755102040816327};

struct Panel {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel kronrod15(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double resk = fc * kKronrodWeights[7];
  double resg = fc * kGaussWeights[3];
  double resabs = std::fabs(resk);
  std::array<double, 7> f1{};
  std::array<double, 7> f2{};
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    f1[j] = f(center - dx);
    f2[j] = f(center + dx);
    const double pair = f1[j] + f2[j];
    resk += kKronrodWeights[j] * pair;
    resabs += kKronrodWeights[j] * (std::fabs(f1[j]) + std::fabs(f2[j]));
    if (j % 2 == 1) resg += kGaussWeights[j / 2] * pair;
  }
  const double mean = 0.5 * resk;
  double resasc = kKronrodWeights[7] * std::fabs(fc - mean);
  for (std::size_t j = 0; j < 7; ++j) {
    resasc += kKronrodWeights[j] * (std::fabs(f1[j] - mean) + std::fabs(f2[j] - mean));
  }
  const double scale = std::fabs(half);
  double err = std::fabs((resk - resg) * half);
  resasc *= scale;
  resabs *= scale;
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
  return {a, b, resk * half, err};
}

}  // namespace detail

/// Integrates f over [a, b] until the summed error estimate is <= abs_tol or
/// `max_panels` subintervals are in use.
template <class F>
Result integrate(F&& f, double a, double b, double abs_tol, std::size_t max_panels = 500) {
  Result out;
  if (!(b > a)) return out;
  std::priority_queue<detail::Panel> heap;
  heap.push(detail::kronrod15(f, a, b));
  out.evaluations = 15;
  double total_err = heap.top().error;
  while (total_err > abs_tol && heap.size() < max_panels) {
    const detail::Panel worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;
    heap.pop();
    const detail::Panel left = detail::kronrod15(f, worst.a, mid);
    const detail::Panel right = detail::kronrod15(f, mid, worst.b);
    out.evaluations += 30;
    heap.push(left);
    heap.push(right);
    total_err += left.error + right.error - worst.error;
  }
  // Re-sum so the panels contribute in a fixed (heap-independent) order.
  std::vector<detail::Panel> panels;
  panels.reserve(heap.size());
  while (!heap.empty()) {
    panels.push_back(heap.top());
    heap.pop();
  }
  std::sort(panels.begin(), panels.end(), [](const detail::Panel& x, const detail::Panel& y) { return x.a < y.a; });
  double value = 0.0;
  double err = 0.0;
  for (const auto& p : panels) {
    value += p.value;
    err += p.error;
  }
  out.value = value;
  out.error = err;
  out.converged = err <= abs_tol;
  return out;
}

}  // namespace sysrisk::quad
