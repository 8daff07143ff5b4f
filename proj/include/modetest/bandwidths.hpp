#pragma once

#include <cstddef>
#include <optional>

#include "modetest/kde.hpp"

namespace modetest {

struct CriticalBandwidthResult {
  double h = 0.0;
  std::size_t k = 0;
  std::optional<Interval> interval;
  // Final bracket: bracket_lo has more than k modes, bracket_hi = h satisfies
  // the target.
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  std::size_t iterations = 0;
  // Hall-York only: bisection ended on a bandwidth with fewer than k modes in
  // the interval and a geometric sweep located the answer instead.
  bool swept = false;
};

// Smallest h whose Gaussian KDE has at most k modes. Bisection stops once the
// bracket is narrower than 1/1024 of the initial lower end.
CriticalBandwidthResult critical_bandwidth(const SortedSample& sample, std::size_t k);

// Smallest h whose KDE has exactly k modes in the interior of `interval`.
CriticalBandwidthResult hy_critical_bandwidth(const SortedSample& sample, std::size_t k,
                                              Interval interval);

// Two-stage direct plug-in bandwidth for estimating f''. The sixth-order
// functional is started from a normal reference and refined twice with
// kernel estimates before the final n^(-1/9) rule.
double plugin_bandwidth_second_deriv(const SortedSample& sample);

// Normal-reference AMISE-optimal bandwidths for f (order n^(-1/5)) and f''
// (order n^(-1/9)).
double normal_reference_bandwidth(const SortedSample& sample);
double normal_reference_bandwidth_second_deriv(const SortedSample& sample);

// Normal-scale value of psi_r = integral f^(r) f for N(0, sigma^2), r even.
double normal_scale_psi(int r, double sigma);

// Kernel estimate of psi_r with pilot bandwidth g (r even).
double estimate_psi(const SortedSample& sample, int r, double g);

}  // namespace modetest
