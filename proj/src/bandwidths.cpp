#include "modetest/bandwidths.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "modetest/error.hpp"

namespace modetest {

namespace {

constexpr int kMaxExpansions = 64;
constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;

std::string bracket_message(const char* what, std::size_t k, double lo, double hi) {
  std::ostringstream os;
  os.precision(17);
  os << what << " (k = " << k << ", bracket [" << lo << ", " << hi << "])";
  return os.str();
}

double hermite(int r, double u) {
  double prev = 1.0;
  if (r == 0) return prev;
  double cur = u;
  for (int m = 1; m < r; ++m) {
    const double next = u * cur - m * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

double double_factorial(int m) {
  double out = 1.0;
  for (int j = m; j > 1; j -= 2) out *= j;
  return out;
}

// phi^(r)(0) for even r.
double phi_derivative_at_zero(int r) {
  const double sign = (r / 2) % 2 == 0 ? 1.0 : -1.0;
  return sign * double_factorial(r - 1) * kInvSqrt2Pi;
}

double sample_sd(const SortedSample& sample, const char* where) {
  sample.require_size(2, where);
  const double sd = std::sqrt(sample.variance());
  if (!(sd > 0.0)) throw InvalidArgument(std::string(where) + ": sample variance is zero");
  return sd;
}

// Bisection on a monotone predicate: `satisfied(h)` holds for large h.
// Starts from [range/128, range/2], expanding both ends as needed.
template <class Pred>
CriticalBandwidthResult bisect(const SortedSample& sample, std::size_t k, Pred satisfied,
                               const char* what) {
  CriticalBandwidthResult out;
  out.k = k;
  const double range = sample.range();
  if (!(range > 0.0)) throw BracketError(bracket_message(what, k, 0.0, 0.0) + ": zero range");

  double hi = range / 2.0;
  int expansions = 0;
  while (!satisfied(hi)) {
    if (++expansions > kMaxExpansions) {
      throw BracketError(bracket_message(what, k, hi / 2.0, hi) + ": upper end never satisfied");
    }
    hi *= 2.0;
  }
  double lo = hi / 64.0;
  expansions = 0;
  while (satisfied(lo)) {
    if (++expansions > kMaxExpansions) {
      throw BracketError(bracket_message(what, k, lo, hi) +
                         ": lower end never exceeds k modes (too few distinct values?)");
    }
    hi = lo;
    lo /= 2.0;
  }
  const double tolerance = lo / 1024.0;
  while (hi - lo >= tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (satisfied(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
    ++out.iterations;
  }
  out.h = hi;
  out.bracket_lo = lo;
  out.bracket_hi = hi;
  return out;
}

}  // namespace

CriticalBandwidthResult critical_bandwidth(const SortedSample& sample, std::size_t k) {
  if (k == 0) throw InvalidArgument("critical bandwidth: k must be at least 1");
  sample.require_size(k + 1, "critical bandwidth");
  return bisect(
      sample, k,
      [&](double h) { return count_modes(Kde(sample, h), std::nullopt, k) <= k; },
      "critical bandwidth bracketing failed");
}

CriticalBandwidthResult hy_critical_bandwidth(const SortedSample& sample, std::size_t k,
                                              Interval interval) {
  if (k == 0) throw InvalidArgument("interval critical bandwidth: k must be at least 1");
  if (!(interval.hi > interval.lo)) {
    throw InvalidArgument("interval critical bandwidth: interval must have positive width");
  }
  sample.require_size(k + 1, "interval critical bandwidth");
  auto count = [&](double h) { return count_modes(Kde(sample, h), interval, k); };

  CriticalBandwidthResult out = bisect(
      sample, k, [&](double h) { return count(h) <= k; },
      "interval critical bandwidth bracketing failed");
  out.interval = interval;
  if (count(out.h) == k) return out;

  // The count inside the interval is not monotone in h; sweep downwards from
  // the upper end for the smallest h with exactly k modes whose lower
  // neighbour has more than k, then bisect that pair.
  const double ratio = std::exp2(-1.0 / 8.0);
  double h = sample.range() / 2.0;
  while (count(h) > k) h *= 2.0;
  std::optional<double> last_exact;
  for (int step = 0; step < 8 * kMaxExpansions; ++step) {
    const std::size_t c = count(h);
    if (c > k) {
      if (!last_exact) break;
      double lo = h;
      double hi = *last_exact;
      const double tolerance = lo / 1024.0;
      while (hi - lo >= tolerance) {
        const double mid = 0.5 * (lo + hi);
        const std::size_t cm = count(mid);
        if (cm > k) {
          lo = mid;
        } else if (cm == k) {
          hi = mid;
        } else {
          // Fewer modes again between the two: keep the upper part.
          lo = mid;
        }
        ++out.iterations;
      }
      out.h = hi;
      out.bracket_lo = lo;
      out.bracket_hi = hi;
      out.swept = true;
      return out;
    }
    if (c == k) last_exact = h;
    h *= ratio;
  }
  throw BracketError(bracket_message("interval critical bandwidth: no bandwidth gives exactly k "
                                     "modes in the interval",
                                     k, h, sample.range()));
}

double normal_scale_psi(int r, double sigma) {
  if (r % 2 != 0 || r < 0) throw InvalidArgument("normal_scale_psi: r must be even");
  const int half = r / 2;
  const double sign = half % 2 == 0 ? 1.0 : -1.0;
  return sign * std::tgamma(r + 1.0) /
         (std::pow(2.0 * sigma, r + 1) * std::tgamma(half + 1.0) * std::sqrt(std::numbers::pi));
}

double estimate_psi(const SortedSample& sample, int r, double g) {
  if (r % 2 != 0 || r < 0) throw InvalidArgument("estimate_psi: r must be even");
  const auto x = sample.values();
  const std::size_t n = x.size();
  constexpr double kReach = 40.0;
  double off = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double u = (x[j] - x[i]) / g;
      if (u > kReach) break;
      off += hermite(r, u) * std::exp(-0.5 * u * u);
    }
  }
  const double diag = static_cast<double>(n) * hermite(r, 0.0);
  const double total = (diag + 2.0 * off) * kInvSqrt2Pi;
  return total / (static_cast<double>(n) * static_cast<double>(n) * std::pow(g, r + 1));
}

double plugin_bandwidth_second_deriv(const SortedSample& sample) {
  sample.require_size(4, "plug-in bandwidth");
  const double sigma = sample_sd(sample, "plug-in bandwidth");
  const double n = static_cast<double>(sample.size());

  const double psi12 = normal_scale_psi(12, sigma);
  const double g10 = std::pow(2.0 * phi_derivative_at_zero(10) / (-psi12 * n), 1.0 / 13.0);
  double psi10 = estimate_psi(sample, 10, g10);
  if (!(psi10 < 0.0)) psi10 = normal_scale_psi(10, sigma);
  const double g8 = std::pow(2.0 * phi_derivative_at_zero(8) / (-psi10 * n), 1.0 / 11.0);
  double psi8 = estimate_psi(sample, 8, g8);
  if (!(psi8 > 0.0)) psi8 = normal_scale_psi(8, sigma);

  const double roughness = 3.0 / (8.0 * std::sqrt(std::numbers::pi));
  return std::pow(5.0 * roughness / (psi8 * n), 1.0 / 9.0);
}

double normal_reference_bandwidth(const SortedSample& sample) {
  const double sigma = sample_sd(sample, "normal reference bandwidth");
  return std::pow(4.0 / (3.0 * static_cast<double>(sample.size())), 0.2) * sigma;
}

double normal_reference_bandwidth_second_deriv(const SortedSample& sample) {
  const double sigma = sample_sd(sample, "normal reference bandwidth");
  const double roughness = 3.0 / (8.0 * std::sqrt(std::numbers::pi));
  const double psi8 = normal_scale_psi(8, sigma);
  return std::pow(5.0 * roughness / (psi8 * static_cast<double>(sample.size())), 1.0 / 9.0);
}

}  // namespace modetest
