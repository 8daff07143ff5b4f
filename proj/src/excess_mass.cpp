#include "modetest/excess_mass.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "modetest/error.hpp"

namespace modetest {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Choice codes stored per (point, blocks, covered) for witness recovery.
constexpr std::uint8_t kContinue = 0;
constexpr std::uint8_t kNewAfterCovered = 1;
constexpr std::uint8_t kNewAfterGap = 2;
constexpr std::uint8_t kGapFromCovered = 0;
constexpr std::uint8_t kGapFromGap = 4;

struct DpTables {
  // best[b][p]: minimal length with exactly b blocks covering p points.
  std::vector<std::vector<double>> covered;  // last point covered
  std::vector<std::vector<double>> gap;      // last point not covered
  std::vector<std::uint8_t> choices;         // optional, size n * (kmax+1) * (n+1)
};

// Interval-family DP over the sorted points. A block is a run of consecutive
// points; its length is x[last] - x[first]. Tracks, after point i, the cheapest
// family with b blocks covering c points, split by whether point i is covered.
DpTables run_dp(std::span<const double> x, std::size_t kmax, bool keep_choices) {
  const std::size_t n = x.size();
  const std::size_t width = n + 1;
  DpTables t;
  t.covered.assign(kmax + 1, std::vector<double>(width, kInf));
  t.gap.assign(kmax + 1, std::vector<double>(width, kInf));
  if (keep_choices) t.choices.assign(n * (kmax + 1) * width, 0);
  if (n == 0) {
    t.gap[0][0] = 0.0;
    return t;
  }
  t.gap[0][0] = 0.0;
  if (kmax >= 1) t.covered[1][1] = 0.0;

  auto next_covered = t.covered;
  auto next_gap = t.gap;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double g = x[i + 1] - x[i];
    const std::size_t limit = std::min(i + 2, n);  // points covered after i+1
    for (std::size_t b = 0; b <= kmax; ++b) {
      auto& nc = next_covered[b];
      auto& ng = next_gap[b];
      const auto& cv = t.covered[b];
      const auto& gp = t.gap[b];
      std::uint8_t* ch = keep_choices ? &t.choices[((i + 1) * (kmax + 1) + b) * width] : nullptr;
      nc[0] = kInf;
      for (std::size_t c = 0; c <= limit; ++c) {
        // Point i+1 not covered.
        const double from_cov = cv[c];
        const double from_gap = gp[c];
        if (from_gap < from_cov) {
          ng[c] = from_gap;
          if (ch) ch[c] = kGapFromGap;
        } else {
          ng[c] = from_cov;
          if (ch) ch[c] = kGapFromCovered;
        }
        if (c == 0) continue;
        // Point i+1 covered.
        double best = cv[c - 1] + g;
        std::uint8_t how = kContinue;
        if (b >= 1) {
          const double a = t.covered[b - 1][c - 1];
          const double z = t.gap[b - 1][c - 1];
          if (a < best) {
            best = a;
            how = kNewAfterCovered;
          }
          if (z < best) {
            best = z;
            how = kNewAfterGap;
          }
        }
        nc[c] = best;
        if (ch) ch[c] |= how;
      }
    }
    std::swap(t.covered, next_covered);
    std::swap(t.gap, next_gap);
  }
  return t;
}

void check_k(std::size_t k, const char* where) {
  if (k == 0) throw InvalidArgument(std::string(where) + ": k must be at least 1");
}

double excess_mass_from_lengths(const std::vector<double>& d, std::size_t n, double lambda) {
  double best = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t q = 0; q < d.size(); ++q) {
    best = std::max(best, static_cast<double>(q) * inv_n - lambda * d[q]);
  }
  return best;
}

// O(n K) evaluation of the K-interval excess mass at a fixed lambda.
double excess_mass_at(std::span<const double> x, std::size_t kmax, double lambda) {
  const std::size_t n = x.size();
  if (n == 0) return 0.0;
  const double mass = 1.0 / static_cast<double>(n);
  const double neg = -kInf;
  std::vector<double> cov(kmax + 1, neg);
  std::vector<double> gap(kmax + 1, neg);
  gap[0] = 0.0;
  if (kmax >= 1) cov[1] = mass;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double cost = lambda * (x[i + 1] - x[i]);
    for (std::size_t b = kmax + 1; b-- > 0;) {
      double covered = cov[b] + mass - cost;
      if (b >= 1) covered = std::max({covered, cov[b - 1] + mass, gap[b - 1] + mass});
      gap[b] = std::max(gap[b], cov[b]);
      cov[b] = covered;
    }
  }
  double best = 0.0;
  for (std::size_t b = 0; b <= kmax; ++b) best = std::max({best, cov[b], gap[b]});
  return best;
}

void dedup_sorted(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  out.reserve(v.size());
  for (double x : v) {
    if (!out.empty() && std::abs(x - out.back()) <= 1e-12 * std::max(std::abs(x), 1e-300)) {
      continue;
    }
    out.push_back(x);
  }
  v.swap(out);
}

}  // namespace

std::vector<double> min_lengths(const SortedSample& sample, std::size_t k) {
  check_k(k, "min_lengths");
  const std::size_t n = sample.size();
  const DpTables t = run_dp(sample.values(), k, false);
  std::vector<double> d(n + 1, kInf);
  for (std::size_t p = 0; p <= n; ++p) {
    if (p <= k) {
      d[p] = 0.0;
      continue;
    }
    for (std::size_t b = 0; b <= k; ++b) d[p] = std::min({d[p], t.covered[b][p], t.gap[b][p]});
  }
  return d;
}

IntervalFamilyValue min_length_dp(const SortedSample& sample, std::size_t k, std::size_t p) {
  check_k(k, "min_length_dp");
  const std::size_t n = sample.size();
  if (p < k) {
    throw InvalidArgument("min_length_dp: p = " + std::to_string(p) + " is below k = " +
                          std::to_string(k));
  }
  if (p > n) {
    throw InvalidArgument("min_length_dp: p = " + std::to_string(p) + " exceeds n = " +
                          std::to_string(n));
  }
  const auto x = sample.values();
  const std::size_t width = n + 1;
  const DpTables t = run_dp(x, k, true);

  IntervalFamilyValue out;
  out.k = k;
  out.p = p;
  out.length = kInf;
  std::size_t b_best = 0;
  bool covered_state = false;
  for (std::size_t b = 0; b <= k; ++b) {
    if (t.covered[b][p] < out.length) {
      out.length = t.covered[b][p];
      b_best = b;
      covered_state = true;
    }
    if (t.gap[b][p] < out.length) {
      out.length = t.gap[b][p];
      b_best = b;
      covered_state = false;
    }
  }
  if (p == 0) {
    out.length = 0.0;
    return out;
  }

  std::size_t b = b_best;
  std::size_t c = p;
  std::size_t hi = 0;
  bool open = false;
  for (std::size_t i = n - 1;; --i) {
    if (covered_state && !open) {
      hi = i;
      open = true;
    }
    if (i == 0) {
      if (covered_state) out.witness.emplace_back(x[0], x[hi]);
      break;
    }
    const std::uint8_t ch = t.choices[(i * (k + 1) + b) * width + c];
    if (covered_state) {
      const std::uint8_t how = ch & 3u;
      if (how == kContinue) {
        --c;
      } else {
        out.witness.emplace_back(x[i], x[hi]);
        open = false;
        --b;
        --c;
        covered_state = how == kNewAfterCovered;
      }
    } else {
      covered_state = (ch & kGapFromGap) == 0;
    }
  }
  std::reverse(out.witness.begin(), out.witness.end());
  return out;
}

double empirical_excess_mass(const SortedSample& sample, std::size_t k, double lambda) {
  check_k(k, "empirical_excess_mass");
  if (!(lambda >= 0.0)) throw InvalidArgument("empirical_excess_mass: lambda must be >= 0");
  return excess_mass_at(sample.values(), k, lambda);
}

std::size_t default_grid_size(std::size_t n) {
  if (n <= 50) return 100;
  if (n <= 100) return 40;
  if (n <= 200) return 20;
  return 5;
}

std::vector<double> lambda_candidates(const std::vector<double>& d, std::size_t n, std::size_t k,
                                      bool* tie) {
  std::vector<double> out;
  const double dn = static_cast<double>(n);
  std::size_t q = n;
  while (q > k) {
    double best = kInf;
    std::size_t best_q = q;
    for (std::size_t r = k; r < q; ++r) {
      const double dl = d[q] - d[r];
      if (!(dl > 0.0)) continue;
      const double ratio = static_cast<double>(q - r) / (dn * dl);
      if (ratio < best * (1.0 - 1e-12)) {
        best = ratio;
        best_q = r;
      } else if (ratio <= best * (1.0 + 1e-12)) {
        // Equal ratios: keep the larger point count.
        if (tie) *tie = true;
        best = std::min(best, ratio);
        best_q = std::max(best_q, r);
      }
    }
    if (best_q == q) break;
    out.push_back(best);
    q = best_q;
  }
  return out;
}

ExcessMassResult delta_statistic(const SortedSample& sample, std::size_t k,
                                 const ExcessMassOptions& options) {
  check_k(k, "excess mass statistic");
  sample.require_size(k + 2, "excess mass statistic");
  sample.require_distinct("excess mass statistic");
  const std::size_t n = sample.size();

  ExcessMassResult out;
  out.k = k;
  out.mode = options.mode;

  if (options.mode == ExcessMassMode::Exact) {
    const std::vector<double> dk = min_lengths(sample, k);
    const std::vector<double> dk1 = min_lengths(sample, k + 1);
    out.candidates_k = lambda_candidates(dk, n, k, &out.descent_tie);
    out.candidates_k1 = lambda_candidates(dk1, n, k + 1, &out.descent_tie);
    std::vector<double> all = out.candidates_k;
    all.insert(all.end(), out.candidates_k1.begin(), out.candidates_k1.end());
    dedup_sorted(all);
    for (double lambda : all) {
      const double diff =
          excess_mass_from_lengths(dk1, n, lambda) - excess_mass_from_lengths(dk, n, lambda);
      if (diff > out.delta) {
        out.delta = diff;
        out.lambda_star = lambda;
      }
    }
    return out;
  }

  out.grid_size = options.grid_size == 0 ? default_grid_size(n) : options.grid_size;
  const std::vector<double> d1 = min_lengths(sample, 1);
  std::vector<double> base = lambda_candidates(d1, n, 1, &out.descent_tie);
  dedup_sorted(base);
  std::vector<double> grid = base;
  for (std::size_t j = 0; j + 1 < base.size(); ++j) {
    const double step = (base[j + 1] - base[j]) / static_cast<double>(out.grid_size + 1);
    for (std::size_t m = 1; m <= out.grid_size; ++m) {
      grid.push_back(base[j] + static_cast<double>(m) * step);
    }
  }
  std::sort(grid.begin(), grid.end());
  out.candidates_k = base;
  const auto x = sample.values();
  for (double lambda : grid) {
    const double diff = excess_mass_at(x, k + 1, lambda) - excess_mass_at(x, k, lambda);
    if (diff > out.delta) {
      out.delta = diff;
      out.lambda_star = lambda;
    }
  }
  return out;
}

}  // namespace modetest
