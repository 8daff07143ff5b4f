#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "modetest/kde.hpp"
#include "modetest/rng.hpp"

namespace modetest {

// C1 blend on [u, v] with values a0, a1 and slopes b0, b1 at the ends.
// Monotone on [u, v] when b0, b1 and a1 - a0 share a sign. Requires v > u and
// a0 != a1.
double link_function(double x, double u, double v, double a0, double a1, double b0, double b1);
double link_derivative(double x, double u, double v, double a0, double a1, double b0, double b1);

// p * (1 + delta ((x - xhat) / eta)^2)^(eta^2 delta q / (2 p)), delta = -1 at a
// mode and +1 at an antimode. Value p and second derivative q at xhat.
double kappa_function(double x, double xhat, double p, double q, double eta, int delta);
double kappa_derivative(double x, double xhat, double p, double q, double eta, int delta);
double kappa_second_derivative(double x, double xhat, double p, double q, double eta, int delta);

enum class TurningKind { Mode, Antimode };

inline int delta_of(TurningKind kind) { return kind == TurningKind::Mode ? -1 : 1; }

struct TurningPointInfo {
  double location = 0.0;
  double height = 0.0;
  TurningKind kind = TurningKind::Mode;
  // Second derivative target and the bandwidth it was estimated with.
  double curvature = 0.0;
  double curvature_bandwidth = 0.0;
  // The plug-in estimate had the wrong sign and a bandwidth closer to the
  // construction bandwidth was substituted.
  bool sign_fallback = false;
  double d_ratio() const;
};

struct Neighborhood {
  double theta = 0.0;
  double r = 0.0;
  double s = 0.0;
  double eta = 0.0;
  double v = 0.0;
  double w = 0.0;
};

// Height, level-set endpoints, K half-width and K support for turning point
// `i` of `profile` (ascending, alternating). `left` / `right` are the
// neighbouring points used for the height rule; nullopt stands for -inf /
// +inf with height 0.
struct NeighbourPoint {
  double location;
  double height;
};
Neighborhood solve_neighborhood(const Kde& base, const TurningPointInfo& point,
                                std::optional<NeighbourPoint> left,
                                std::optional<NeighbourPoint> right, double varsigma);

enum class SegmentKind { Kde, LinkIn, Kappa, LinkOut, Saddle, TailLink, Zero };

const char* to_string(SegmentKind kind);

struct Segment {
  SegmentKind kind = SegmentKind::Kde;
  double lo = 0.0;
  double hi = 0.0;
  // Link parameters (LinkIn, LinkOut, Saddle, TailLink).
  double u = 0.0, v = 0.0, a0 = 0.0, a1 = 0.0, b0 = 0.0, b1 = 0.0;
  // Kappa parameters.
  double xhat = 0.0, p = 0.0, q = 0.0, eta = 0.0;
  int delta = 0;
  // Turning point or saddle index this segment belongs to (-1 for none).
  int owner = -1;
};

enum class Normalization { Raw, DividedByQ };

struct CalibrationOptions {
  // Explicit per-turning-point values; when empty the shrink policy starts at
  // varsigma_start and halves until |q - 1| <= q_tolerance.
  std::vector<double> varsigma;
  double varsigma_start = 0.1;
  int max_halvings = 20;
  double q_tolerance = 1e-3;
  double varpi = 0.05;
  std::optional<Interval> support;
  double saddle_tolerance = 1e-12;
};

class CalibrationDensity {
 public:
  double density(double x) const;
  double derivative(double x) const;
  // Inverse-CDF sampling from the precomputed table; sorted output.
  SortedSample sample(std::size_t n, RngStream& rng) const;
  // CDF from the sampling table.
  double cdf(double x) const;

  const Kde& base() const { return base_; }
  double construction_bandwidth() const { return base_.bandwidth(); }
  double plugin_bandwidth() const { return plugin_bandwidth_; }
  std::size_t k() const { return k_; }
  const std::vector<TurningPointInfo>& profile() const { return profile_; }
  const std::vector<Neighborhood>& neighborhoods() const { return neighborhoods_; }
  const std::vector<double>& saddles() const { return saddles_; }
  const std::vector<Segment>& segments() const { return segments_; }
  const std::vector<double>& varsigma() const { return varsigma_; }
  double varpi() const { return varpi_; }
  // Integral of the unnormalized construction.
  double q() const { return q_; }
  Normalization normalization() const { return normalization_; }
  double scale() const { return scale_; }
  int halvings() const { return halvings_; }
  const std::optional<Interval>& support() const { return support_; }
  bool tail_fallback() const { return tail_fallback_; }
  // Integration range of the sampling table.
  Interval table_range() const { return {cells_.front(), cells_.back()}; }
  // Left/right limits of g beyond which it is exactly zero (infinite when the
  // tails are kernel tails).
  double lower_limit() const { return lower_limit_; }
  double upper_limit() const { return upper_limit_; }

 private:
  friend CalibrationDensity build_calibration(const SortedSample&, std::size_t,
                                              const CalibrationOptions&);
  friend CalibrationDensity build_calibration_with_bandwidths(
      const SortedSample&, std::size_t, double, double, const CalibrationOptions&);
  CalibrationDensity(Kde base) : base_(std::move(base)) {}

  const Segment* find_segment(double x) const;
  double raw_density(double x) const;
  double raw_derivative(double x) const;
  void build_table();

  Kde base_;
  double plugin_bandwidth_ = 0.0;
  std::size_t k_ = 0;
  std::vector<TurningPointInfo> profile_;
  std::vector<Neighborhood> neighborhoods_;
  std::vector<double> saddles_;
  std::vector<Segment> segments_;  // sorted, non-overlapping, non-Kde only
  std::vector<double> varsigma_;
  double varpi_ = 0.05;
  double q_ = 1.0;
  Normalization normalization_ = Normalization::Raw;
  double scale_ = 1.0;
  int halvings_ = 0;
  std::optional<Interval> support_;
  bool tail_fallback_ = false;
  double lower_limit_ = 0.0;
  double upper_limit_ = 0.0;

  std::vector<double> cells_;       // cell boundaries
  std::vector<double> cumulative_;  // mass up to each boundary
  std::vector<double> edge_density_;
};

// Builds g from the critical bandwidth h_k (or the interval critical
// bandwidth when options.support is set) and the plug-in bandwidth for f''.
// Throws ConstructionError if the KDE does not have exactly k modes.
CalibrationDensity build_calibration(const SortedSample& sample, std::size_t k,
                                     const CalibrationOptions& options = {});

// Same construction with the bandwidths supplied by the caller.
CalibrationDensity build_calibration_with_bandwidths(const SortedSample& sample, std::size_t k,
                                                     double h, double h_plugin,
                                                     const CalibrationOptions& options = {});

// Shape summary of a density on a grid: mode count, antimode count and the
// smallest |g'| away from turning points, for checks of constructed g.
struct ShapeSummary {
  std::size_t modes = 0;
  std::size_t antimodes = 0;
  std::vector<double> mode_locations;
};
ShapeSummary analyze_shape(const CalibrationDensity& g, std::size_t points_per_unit_h = 64);

}  // namespace modetest
