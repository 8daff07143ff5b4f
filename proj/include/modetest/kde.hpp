#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace modetest {

// Ascending real observations with shared immutable storage, so copies are
// cheap. Ties are allowed at construction; operations that need distinct
// values call require_distinct().
class SortedSample {
 public:
  SortedSample() : SortedSample(std::vector<double>{}) {}
  explicit SortedSample(std::vector<double> values);

  std::span<const double> values() const { return *values_; }
  std::size_t size() const { return values_->size(); }
  double operator[](std::size_t i) const { return (*values_)[i]; }
  double min() const { return values_->front(); }
  double max() const { return values_->back(); }
  double range() const { return max() - min(); }

  bool distinct() const { return distinct_; }
  // Throws TieError naming `where` if any two values are equal.
  void require_distinct(const char* where) const;
  // Throws InvalidArgument unless size() >= n.
  void require_size(std::size_t n, const char* where) const;

  double mean() const;
  double variance() const;  // unbiased

  // Returns a*x + b for every value (a != 0), re-sorted.
  SortedSample affine(double a, double b) const;

 private:
  std::shared_ptr<const std::vector<double>> values_;
  bool distinct_ = true;
};

struct Interval {
  double lo;
  double hi;

  double width() const { return hi - lo; }
  bool contains_interior(double x) const { return lo < x && x < hi; }
};

// Gaussian kernel density estimator with bandwidth h.
// Kernel sums skip observations farther than kCutoff bandwidths from x; the
// neglected terms are below exp(-72) relative to a single kernel peak.
class Kde {
 public:
  static constexpr double kCutoff = 12.0;

  // Accepts any nonempty sorted sample (n = 1 is allowed for unit checks).
  Kde(SortedSample sample, double bandwidth);

  const SortedSample& sample() const { return sample_; }
  double bandwidth() const { return h_; }

  double density(double x) const;
  // Analytic derivative of order 1 or 2.
  double derivative(double x, int order) const;
  double cdf(double x) const;

  // Default scan window [min - 3h, max + 3h]; every mode of a Gaussian KDE lies
  // inside [min, max].
  Interval default_window() const;

 private:
  std::pair<std::size_t, std::size_t> neighbours(double x) const;

  SortedSample sample_;
  double h_;
};

struct TurningPoint {
  double location;
  double height;
};

struct TurningPointSet {
  std::vector<TurningPoint> modes;
  std::vector<TurningPoint> antimodes;
  std::vector<double> saddles;
  // True when a plateau of |f'| below the saddle tolerance was classified as a
  // saddle point.
  bool saddle_classified = false;
};

struct TurningPointOptions {
  std::optional<Interval> window;
  // |f'| below saddle_tolerance * max|f'| without a sign change marks a saddle.
  double saddle_tolerance = 1e-12;
  // Minimum number of grid points; spacing is also capped at h / 8.
  std::size_t min_grid = 1024;
};

TurningPointSet find_turning_points(const Kde& kde, const TurningPointOptions& options = {});

// Number of modes of the KDE, optionally restricted to the interior of
// `inside`. Stops counting once the count exceeds `limit`. Sign changes of f'
// are detected on the scan grid; shoulders where |f'| dips between grid points
// are examined so that mode pairs narrower than the grid are not missed.
std::size_t count_modes(const Kde& kde, std::optional<Interval> inside = std::nullopt,
                        std::size_t limit = static_cast<std::size_t>(-1));

// f' of the KDE on a uniform grid (lo + j * step), computed by direct
// summation with a multiplicative recurrence for the Gaussian factors.
std::vector<double> derivative_on_grid(const Kde& kde, double lo, double step, std::size_t points);

}  // namespace modetest
