#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "modetest/kde.hpp"

namespace modetest {

struct IntervalFamilyValue {
  std::size_t k = 0;
  std::size_t p = 0;
  double length = 0.0;
  // Closed intervals [lo, hi] with sample values as endpoints, ascending.
  std::vector<std::pair<double, double>> witness;
};

// Minimal total length of at most k disjoint closed intervals with sample
// endpoints covering p sample points. Requires k <= p <= n.
IntervalFamilyValue min_length_dp(const SortedSample& sample, std::size_t k, std::size_t p);

// d_k(p) for p = 0..n (d_k(p) = 0 for p <= k). O(k n^2).
std::vector<double> min_lengths(const SortedSample& sample, std::size_t k);

// sup over at most k disjoint intervals of sum(P_n(C) - lambda |C|).
double empirical_excess_mass(const SortedSample& sample, std::size_t k, double lambda);

enum class ExcessMassMode { Exact, Grid };

struct ExcessMassOptions {
  ExcessMassMode mode = ExcessMassMode::Exact;
  // Grid points inserted between consecutive one-interval candidates; 0 picks
  // the default for the sample size (see default_grid_size).
  std::size_t grid_size = 0;
};

struct ExcessMassResult {
  std::size_t k = 0;
  double delta = 0.0;
  double lambda_star = 0.0;
  std::vector<double> candidates_k;
  std::vector<double> candidates_k1;
  ExcessMassMode mode = ExcessMassMode::Exact;
  std::size_t grid_size = 0;
  // Two descent steps gave equal ratios; the larger point count was kept.
  bool descent_tie = false;
};

std::size_t default_grid_size(std::size_t n);

// Delta_{n,k+1} = max over lambda of E_{k+1}(lambda) - E_k(lambda).
ExcessMassResult delta_statistic(const SortedSample& sample, std::size_t k,
                                 const ExcessMassOptions& options = {});

// Lambda values where the k-interval excess mass changes slope: the descent
// from q = n over the lower hull of (d_k(q), q / n) down to q = k.
std::vector<double> lambda_candidates(const std::vector<double>& d, std::size_t n, std::size_t k,
                                      bool* tie = nullptr);

// Dip statistic of the empirical distribution (greatest convex minorant /
// least concave majorant algorithm). Requires distinct values, n >= 2.
double dip_statistic(const SortedSample& sample);

}  // namespace modetest
