#pragma once

// Independent reference computations for the test suites. Nothing here calls
// the library code it is used to check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

namespace oracle {

// Composite Simpson rule with `intervals` (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      std::size_t intervals = 20000) {
  if (intervals % 2) ++intervals;
  const double h = (b - a) / static_cast<double>(intervals);
  double acc = f(a) + f(b);
  for (std::size_t i = 1; i < intervals; ++i) {
    acc += (i % 2 ? 4.0 : 2.0) * f(a + h * static_cast<double>(i));
  }
  return acc * h / 3.0;
}

// Two-sided Kolmogorov-Smirnov distance of sorted draws against a CDF.
inline double ks_distance(const std::vector<double>& sorted,
                          const std::function<double(double)>& cdf) {
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double F = cdf(sorted[i]);
    d = std::max({d, std::abs(F - static_cast<double>(i) / n),
                  std::abs(static_cast<double>(i + 1) / n - F)});
  }
  return d;
}

inline double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

// Plain O(n) Gaussian KDE without window truncation.
inline double kde(const std::vector<double>& x, double h, double at) {
  double acc = 0.0;
  for (double xi : x) acc += phi((at - xi) / h);
  return acc / (static_cast<double>(x.size()) * h);
}

inline double kde_slope(const std::vector<double>& x, double h, double at) {
  double acc = 0.0;
  for (double xi : x) {
    const double z = (at - xi) / h;
    acc -= z * phi(z);
  }
  return acc / (static_cast<double>(x.size()) * h * h);
}

// Local maxima of f on a uniform grid over [lo, hi]; points where the sign of
// the slope goes from + to -.
inline std::size_t grid_modes(const std::function<double(double)>& slope, double lo, double hi,
                              std::size_t points) {
  std::size_t modes = 0;
  int prev = 0;
  for (std::size_t i = 0; i <= points; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points);
    const double s = slope(x);
    const int sign = (s > 0.0) - (s < 0.0);
    if (sign == 0) continue;
    if (prev > 0 && sign < 0) ++modes;
    prev = sign;
  }
  return modes;
}

inline std::size_t kde_modes_in(const std::vector<double>& x, double h, double lo, double hi,
                                std::size_t points = 40000) {
  return grid_modes([&](double t) { return kde_slope(x, h, t); }, lo, hi, points);
}

// Smallest total length of at most k disjoint closed intervals with data
// endpoints covering p points, by exhaustive enumeration. Returns +inf when
// infeasible. x must be sorted; intended for n <= 12.
inline void enumerate_families(const std::vector<double>& x, std::size_t start, std::size_t left,
                               std::size_t covered, double length,
                               std::vector<double>& best_by_p) {
  best_by_p[covered] = std::min(best_by_p[covered], length);
  if (left == 0) return;
  const std::size_t n = x.size();
  for (std::size_t i = start; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      enumerate_families(x, j + 1, left - 1, covered + (j - i + 1), length + (x[j] - x[i]),
                         best_by_p);
    }
  }
}

inline std::vector<double> brute_min_lengths(const std::vector<double>& x, std::size_t k) {
  std::vector<double> best(x.size() + 1, std::numeric_limits<double>::infinity());
  enumerate_families(x, 0, k, 0, 0.0, best);
  return best;
}

inline double excess_mass_from(const std::vector<double>& d, std::size_t n, double lambda) {
  double best = 0.0;
  for (std::size_t p = 0; p < d.size(); ++p) {
    if (std::isfinite(d[p])) {
      best = std::max(best, static_cast<double>(p) / static_cast<double>(n) - lambda * d[p]);
    }
  }
  return best;
}

// Delta_{n,k+1}: maximum of E_{k+1} - E_k over every breakpoint candidate
// (pairwise ratios of count and length differences), plus 0 and a lambda past
// the last breakpoint.
inline double brute_delta(const std::vector<double>& x, std::size_t k) {
  const std::size_t n = x.size();
  const std::vector<double> dk = brute_min_lengths(x, k);
  const std::vector<double> dk1 = brute_min_lengths(x, k + 1);
  std::vector<double> lambdas{0.0};
  double biggest = 0.0;
  for (const auto* d : {&dk, &dk1}) {
    for (std::size_t p1 = 0; p1 <= n; ++p1) {
      for (std::size_t p2 = 0; p2 < p1; ++p2) {
        if (!std::isfinite((*d)[p1]) || !std::isfinite((*d)[p2])) continue;
        const double dl = (*d)[p1] - (*d)[p2];
        if (dl <= 0.0) continue;
        const double lam = static_cast<double>(p1 - p2) / (static_cast<double>(n) * dl);
        lambdas.push_back(lam);
        biggest = std::max(biggest, lam);
      }
    }
  }
  lambdas.push_back(2.0 * biggest + 1.0);
  double best = 0.0;
  for (double lam : lambdas) {
    best = std::max(best, excess_mass_from(dk1, n, lam) - excess_mass_from(dk, n, lam));
  }
  return best;
}

}  // namespace oracle
