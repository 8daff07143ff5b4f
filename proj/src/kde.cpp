#include "modetest/kde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "modetest/error.hpp"

namespace modetest {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;
constexpr std::size_t kMaxGrid = std::size_t{1} << 22;
constexpr int kGoldenIterations = 60;

double standard_normal_cdf(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

struct ScanGrid {
  double lo;
  double step;
  std::size_t points;

  double at(std::size_t j) const { return lo + static_cast<double>(j) * step; }
};

ScanGrid make_grid(const Kde& kde, Interval window, std::size_t min_grid) {
  if (!(window.hi > window.lo) || !std::isfinite(window.lo) || !std::isfinite(window.hi)) {
    throw InvalidArgument("turning point scan: degenerate window");
  }
  const double width = window.hi - window.lo;
  const double by_bandwidth = std::ceil(width / (kde.bandwidth() / 8.0)) + 1.0;
  std::size_t points = std::max<std::size_t>(min_grid, 2);
  if (by_bandwidth > static_cast<double>(points)) {
    points = by_bandwidth > static_cast<double>(kMaxGrid) ? kMaxGrid
                                                           : static_cast<std::size_t>(by_bandwidth);
  }
  return {window.lo, width / static_cast<double>(points - 1), points};
}

// Root of f' between a and b (f' has opposite signs there), by bisection.
double refine_root(const Kde& kde, double a, double b, double tolerance) {
  int sa = sign_of(kde.derivative(a, 1));
  for (int it = 0; it < 200 && (b - a) > tolerance; ++it) {
    const double mid = 0.5 * (a + b);
    const double dm = kde.derivative(mid, 1);
    const int sm = sign_of(dm);
    if (sm == 0) return mid;
    if (sm == sa) {
      a = mid;
    } else {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

// Point in [a, b] where `run_sign` * f' is smallest (golden-section search).
double shoulder_minimum(const Kde& kde, double a, double b, int run_sign) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  auto objective = [&](double x) { return run_sign * kde.derivative(x, 1); };
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = objective(c);
  double fd = objective(d);
  for (int it = 0; it < kGoldenIterations; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  return fc < fd ? c : d;
}

enum class EventKind { Mode, Antimode, Saddle };

struct Event {
  EventKind kind;
  double location;
};

// Shared scan. `visit` receives events in increasing grid order; returning
// false stops the scan. Sign changes are reported first in one pass, then
// shoulders, so callers that only count can stop early.
template <class SignChangeFn, class ShoulderFn>
void scan(const Kde& kde, const ScanGrid& grid, SignChangeFn&& on_sign_change,
          ShoulderFn&& on_shoulder) {
  const std::vector<double> d1 = derivative_on_grid(kde, grid.lo, grid.step, grid.points);

  int prev_sign = 0;
  std::size_t prev_index = 0;
  for (std::size_t j = 0; j < grid.points; ++j) {
    const int s = sign_of(d1[j]);
    if (s == 0) continue;
    if (prev_sign != 0 && s != prev_sign) {
      if (!on_sign_change(prev_sign, grid.at(prev_index), grid.at(j))) return;
    }
    prev_sign = s;
    prev_index = j;
  }

  for (std::size_t j = 1; j + 1 < grid.points; ++j) {
    const int s = sign_of(d1[j]);
    if (s == 0 || sign_of(d1[j - 1]) != s || sign_of(d1[j + 1]) != s) continue;
    const double m = std::abs(d1[j]);
    if (m < std::abs(d1[j - 1]) && m <= std::abs(d1[j + 1])) {
      if (!on_shoulder(s, grid.at(j - 1), grid.at(j + 1), d1)) return;
    }
  }
}

}  // namespace

SortedSample::SortedSample(std::vector<double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidArgument("sample contains a non-finite value");
  }
  std::sort(values.begin(), values.end());
  distinct_ = std::adjacent_find(values.begin(), values.end()) == values.end();
  values_ = std::make_shared<const std::vector<double>>(std::move(values));
}

void SortedSample::require_distinct(const char* where) const {
  if (!distinct_) throw TieError(where);
}

void SortedSample::require_size(std::size_t n, const char* where) const {
  if (size() < n) {
    throw InvalidArgument(std::string(where) + ": need at least " + std::to_string(n) +
                          " observations, got " + std::to_string(size()));
  }
}

double SortedSample::mean() const {
  return std::accumulate(values_->begin(), values_->end(), 0.0) / static_cast<double>(size());
}

double SortedSample::variance() const {
  if (size() < 2) return 0.0;
  const double m = mean();
  double ss = 0.0;
  for (double v : *values_) ss += (v - m) * (v - m);
  return ss / static_cast<double>(size() - 1);
}

SortedSample SortedSample::affine(double a, double b) const {
  if (a == 0.0) throw InvalidArgument("affine map requires a != 0");
  std::vector<double> out;
  out.reserve(size());
  for (double v : *values_) out.push_back(a * v + b);
  return SortedSample(std::move(out));
}

Kde::Kde(SortedSample sample, double bandwidth) : sample_(std::move(sample)), h_(bandwidth) {
  if (!(h_ > 0.0) || !std::isfinite(h_)) throw InvalidArgument("KDE bandwidth must be positive");
  if (sample_.size() == 0) throw InvalidArgument("KDE needs at least one observation");
}

std::pair<std::size_t, std::size_t> Kde::neighbours(double x) const {
  const auto v = sample_.values();
  const auto first = std::lower_bound(v.begin(), v.end(), x - kCutoff * h_);
  const auto last = std::upper_bound(first, v.end(), x + kCutoff * h_);
  return {static_cast<std::size_t>(first - v.begin()), static_cast<std::size_t>(last - v.begin())};
}

double Kde::density(double x) const {
  const auto [first, last] = neighbours(x);
  const auto v = sample_.values();
  double acc = 0.0;
  for (std::size_t i = first; i < last; ++i) {
    const double u = (x - v[i]) / h_;
    acc += std::exp(-0.5 * u * u);
  }
  return acc * kInvSqrt2Pi / (static_cast<double>(sample_.size()) * h_);
}

double Kde::derivative(double x, int order) const {
  if (order != 1 && order != 2) {
    throw InvalidArgument("KDE derivative order must be 1 or 2, got " + std::to_string(order));
  }
  const auto [first, last] = neighbours(x);
  const auto v = sample_.values();
  double acc = 0.0;
  if (order == 1) {
    for (std::size_t i = first; i < last; ++i) {
      const double u = (x - v[i]) / h_;
      acc -= u * std::exp(-0.5 * u * u);
    }
    return acc * kInvSqrt2Pi / (static_cast<double>(sample_.size()) * h_ * h_);
  }
  for (std::size_t i = first; i < last; ++i) {
    const double u = (x - v[i]) / h_;
    acc += (u * u - 1.0) * std::exp(-0.5 * u * u);
  }
  return acc * kInvSqrt2Pi / (static_cast<double>(sample_.size()) * h_ * h_ * h_);
}

double Kde::cdf(double x) const {
  const auto [first, last] = neighbours(x);
  const auto v = sample_.values();
  double acc = static_cast<double>(first);
  for (std::size_t i = first; i < last; ++i) acc += standard_normal_cdf((x - v[i]) / h_);
  return acc / static_cast<double>(sample_.size());
}

Interval Kde::default_window() const {
  return {sample_.min() - 3.0 * h_, sample_.max() + 3.0 * h_};
}

std::vector<double> derivative_on_grid(const Kde& kde, double lo, double step, std::size_t points) {
  std::vector<double> acc(points, 0.0);
  if (points == 0) return acc;
  const double h = kde.bandwidth();
  const double delta = step / h;
  const double decay = std::exp(-delta * delta);
  const double reach = Kde::kCutoff * h;
  const auto last_index = static_cast<double>(points - 1);

  for (double xi : kde.sample().values()) {
    const double j_lo_real = std::ceil((xi - reach - lo) / step);
    const double j_hi_real = std::floor((xi + reach - lo) / step);
    if (j_hi_real < 0.0 || j_lo_real > last_index) continue;
    const auto j_lo = static_cast<std::size_t>(std::max(0.0, j_lo_real));
    const auto j_hi = static_cast<std::size_t>(std::min(last_index, j_hi_real));
    const double centre = std::clamp(std::round((xi - lo) / step), static_cast<double>(j_lo),
                                     static_cast<double>(j_hi));
    const auto j0 = static_cast<std::size_t>(centre);

    const double u0 = (lo + static_cast<double>(j0) * step - xi) / h;
    const double e0 = std::exp(-0.5 * u0 * u0);

    // Forward: E_{j+1} = E_j * exp(-u_j delta - delta^2 / 2).
    double e = e0;
    double ratio = std::exp(-u0 * delta - 0.5 * delta * delta);
    for (std::size_t j = j0;; ++j) {
      const double u = (lo + static_cast<double>(j) * step - xi) / h;
      acc[j] -= u * e;
      if (j == j_hi) break;
      e *= ratio;
      ratio *= decay;
    }
    // Backward: E_{j-1} = E_j * exp(u_j delta - delta^2 / 2).
    e = e0;
    ratio = std::exp(u0 * delta - 0.5 * delta * delta);
    for (std::size_t j = j0; j > j_lo;) {
      e *= ratio;
      ratio *= decay;
      --j;
      const double u = (lo + static_cast<double>(j) * step - xi) / h;
      acc[j] -= u * e;
    }
  }
  const double scale = kInvSqrt2Pi / (static_cast<double>(kde.sample().size()) * h * h);
  for (double& a : acc) a *= scale;
  return acc;
}

TurningPointSet find_turning_points(const Kde& kde, const TurningPointOptions& options) {
  const Interval window = options.window.value_or(kde.default_window());
  const ScanGrid grid = make_grid(kde, window, options.min_grid);
  const double tolerance = 1e-10 * window.width();

  std::vector<Event> events;
  double max_abs = 0.0;
  bool plateau = false;

  scan(
      kde, grid,
      [&](int prev_sign, double a, double b) {
        const double x = refine_root(kde, a, b, tolerance);
        events.push_back({prev_sign > 0 ? EventKind::Mode : EventKind::Antimode, x});
        return true;
      },
      [&](int run_sign, double a, double b, const std::vector<double>& d1) {
        if (max_abs == 0.0) {
          for (double v : d1) max_abs = std::max(max_abs, std::abs(v));
        }
        const double z = shoulder_minimum(kde, a, b, run_sign);
        const double dz = kde.derivative(z, 1);
        if (sign_of(dz) == -run_sign) {
          // Hidden pair: f' leaves the run sign between two grid points.
          const double first = refine_root(kde, a, z, tolerance);
          const double second = refine_root(kde, z, b, tolerance);
          if (run_sign > 0) {
            events.push_back({EventKind::Mode, first});
            events.push_back({EventKind::Antimode, second});
          } else {
            events.push_back({EventKind::Antimode, first});
            events.push_back({EventKind::Mode, second});
          }
        } else if (std::abs(dz) < options.saddle_tolerance * max_abs) {
          events.push_back({EventKind::Saddle, z});
          plateau = true;
        }
        return true;
      });

  std::sort(events.begin(), events.end(),
            [](const Event& l, const Event& r) { return l.location < r.location; });
  TurningPointSet out;
  out.saddle_classified = plateau;
  for (const Event& e : events) {
    switch (e.kind) {
      case EventKind::Mode:
        out.modes.push_back({e.location, kde.density(e.location)});
        break;
      case EventKind::Antimode:
        out.antimodes.push_back({e.location, kde.density(e.location)});
        break;
      case EventKind::Saddle:
        out.saddles.push_back(e.location);
        break;
    }
  }
  return out;
}

std::size_t count_modes(const Kde& kde, std::optional<Interval> inside, std::size_t limit) {
  const Interval window = kde.default_window();
  const ScanGrid grid = make_grid(kde, window, 1024);
  const double tolerance = 1e-10 * window.width();
  std::size_t count = 0;

  auto mode_counts = [&](double a, double b, int prev_sign_at_a) {
    if (!inside) return true;
    if (a > inside->lo && b < inside->hi) return true;
    if (b <= inside->lo || a >= inside->hi) return false;
    (void)prev_sign_at_a;
    return inside->contains_interior(refine_root(kde, a, b, tolerance));
  };

  scan(
      kde, grid,
      [&](int prev_sign, double a, double b) {
        if (prev_sign > 0 && mode_counts(a, b, prev_sign)) ++count;
        return count <= limit;
      },
      [&](int run_sign, double a, double b, const std::vector<double>&) {
        if (inside && (b <= inside->lo || a >= inside->hi)) return true;
        const double z = shoulder_minimum(kde, a, b, run_sign);
        if (sign_of(kde.derivative(z, 1)) != -run_sign) return true;
        // The mode of a hidden pair sits on the side where f' falls from + to -.
        const bool counted = run_sign > 0 ? mode_counts(a, z, 1) : mode_counts(z, b, 1);
        if (counted) ++count;
        return count <= limit;
      });
  return count;
}

}  // namespace modetest
