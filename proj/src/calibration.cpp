#include "modetest/calibration.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "modetest/bandwidths.hpp"
#include "modetest/error.hpp"

namespace modetest {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kCurvatureHalvings = 20;
constexpr int kTailCandidates = 512;
constexpr double kCellTolerance = 1e-8;

// Five-point Gauss-Legendre on [-1, 1].
constexpr double kGlNodes[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                0.5384693101056831, 0.9061798459386640};
constexpr double kGlWeights[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                  0.4786286704993665, 0.2369268850561891};

// Adaptive Gauss-Kronrod with an absolute tolerance; the integrands here are
// differences that can integrate to nearly zero, where a relative tolerance
// never terminates.
template <class F>
double integrate_abs(F& f, double a, double b, double tol, int depth) {
  double err = 0.0;
  const double est =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &err);
  if (err <= tol || depth == 0) return est;
  const double m = 0.5 * (a + b);
  return integrate_abs(f, a, m, 0.5 * tol, depth - 1) +
         integrate_abs(f, m, b, 0.5 * tol, depth - 1);
}

template <class F>
double integrate(F&& f, double a, double b) {
  if (!(b > a)) return 0.0;
  return integrate_abs(f, a, b, 1e-13, 12);
}

// x in [a, b] where `inside` flips; inside(b) is true and inside(a) false.
template <class Pred>
double bisect_boundary(Pred inside, double a, double b) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (a + b);
    if (mid == a || mid == b) break;
    if (inside(mid)) {
      b = mid;
    } else {
      a = mid;
    }
    if (std::abs(b - a) <= 1e-12 * std::max({std::abs(a), std::abs(b), 1e-300})) break;
  }
  return 0.5 * (a + b);
}

std::string construction_message(const std::string& what) {
  return "calibration density: " + what;
}

double eval_segment(const Segment& s, double x) {
  switch (s.kind) {
    case SegmentKind::Kappa:
      return kappa_function(x, s.xhat, s.p, s.q, s.eta, s.delta);
    case SegmentKind::Zero:
      return 0.0;
    case SegmentKind::Kde:
      return 0.0;
    default:
      return link_function(x, s.u, s.v, s.a0, s.a1, s.b0, s.b1);
  }
}

double eval_segment_derivative(const Segment& s, double x) {
  switch (s.kind) {
    case SegmentKind::Kappa:
      return kappa_derivative(x, s.xhat, s.p, s.q, s.eta, s.delta);
    case SegmentKind::Zero:
    case SegmentKind::Kde:
      return 0.0;
    default:
      return link_derivative(x, s.u, s.v, s.a0, s.a1, s.b0, s.b1);
  }
}

Segment make_link(SegmentKind kind, double u, double v, double a0, double a1, double b0,
                  double b1, int owner) {
  if (a0 == a1) a1 = a0 + 1e-12 * std::max(std::abs(a0), 1.0);
  Segment s;
  s.kind = kind;
  s.lo = u;
  s.hi = v;
  s.u = u;
  s.v = v;
  s.a0 = a0;
  s.a1 = a1;
  s.b0 = b0;
  s.b1 = b1;
  s.owner = owner;
  return s;
}

// Moves x by small steps toward `target` until f' is nonzero there.
double avoid_flat(const Kde& f, double x, double target) {
  double step = 1e-9 * std::abs(target - x);
  for (int it = 0; it < 30 && f.derivative(x, 1) == 0.0; ++it) {
    x += target > x ? step : -step;
    step *= 2.0;
  }
  return x;
}

}  // namespace

double link_function(double x, double u, double v, double a0, double a1, double b0, double b1) {
  if (!(v > u)) throw InvalidArgument("link function requires v > u");
  if (a0 == a1) throw InvalidArgument("link function requires a0 != a1");
  const double half = 0.5 * (a0 - a1);
  const double t = (x - u) / (v - u);
  const double t2 = t * t;
  const double t3 = t2 * t;
  return half * (1.0 + 2.0 * t3 - 3.0 * t2) * std::exp((x - u) * b0 / half) +
         half * (2.0 * t3 - 3.0 * t2) * std::exp((v - x) * b1 / half) + 0.5 * (a0 + a1);
}

double link_derivative(double x, double u, double v, double a0, double a1, double b0, double b1) {
  if (!(v > u)) throw InvalidArgument("link function requires v > u");
  if (a0 == a1) throw InvalidArgument("link function requires a0 != a1");
  const double half = 0.5 * (a0 - a1);
  const double width = v - u;
  const double t = (x - u) / width;
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double dpoly = (6.0 * t2 - 6.0 * t) / width;
  const double c0 = b0 / half;
  const double c1 = b1 / half;
  const double e0 = std::exp((x - u) * c0);
  const double e1 = std::exp((v - x) * c1);
  return half * (dpoly + (1.0 + 2.0 * t3 - 3.0 * t2) * c0) * e0 +
         half * (dpoly - (2.0 * t3 - 3.0 * t2) * c1) * e1;
}

namespace {

void check_kappa(double p, double q, double eta, int delta) {
  if (!(p > 0.0)) throw InvalidArgument("kappa function requires p > 0");
  if (!(eta > 0.0)) throw InvalidArgument("kappa function requires eta > 0");
  if (delta != 1 && delta != -1) throw InvalidArgument("kappa function requires delta = +-1");
  if ((q > 0.0 ? 1 : -1) != delta || q == 0.0) {
    throw InvalidArgument("kappa function: sign of q must match delta");
  }
}

}  // namespace

double kappa_function(double x, double xhat, double p, double q, double eta, int delta) {
  check_kappa(p, q, eta, delta);
  const double u = (x - xhat) / eta;
  const double power = eta * eta * delta * q / (2.0 * p);
  return p * std::pow(1.0 + delta * u * u, power);
}

double kappa_derivative(double x, double xhat, double p, double q, double eta, int delta) {
  check_kappa(p, q, eta, delta);
  const double u = (x - xhat) / eta;
  const double power = eta * eta * delta * q / (2.0 * p);
  const double base = 1.0 + delta * u * u;
  return p * power * std::pow(base, power - 1.0) * 2.0 * delta * u / eta;
}

double kappa_second_derivative(double x, double xhat, double p, double q, double eta, int delta) {
  check_kappa(p, q, eta, delta);
  const double u = (x - xhat) / eta;
  const double power = eta * eta * delta * q / (2.0 * p);
  const double base = 1.0 + delta * u * u;
  const double du = 2.0 * delta * u / eta;
  return p * power *
         ((power - 1.0) * std::pow(base, power - 2.0) * du * du +
          std::pow(base, power - 1.0) * 2.0 * delta / (eta * eta));
}

double TurningPointInfo::d_ratio() const {
  return std::abs(curvature) / (height * height * height);
}

const char* to_string(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::Kde: return "kde";
    case SegmentKind::LinkIn: return "link_in";
    case SegmentKind::Kappa: return "kappa";
    case SegmentKind::LinkOut: return "link_out";
    case SegmentKind::Saddle: return "saddle";
    case SegmentKind::TailLink: return "tail_link";
    case SegmentKind::Zero: return "zero";
  }
  return "unknown";
}

Neighborhood solve_neighborhood(const Kde& base, const TurningPointInfo& point,
                                std::optional<NeighbourPoint> left,
                                std::optional<NeighbourPoint> right, double varsigma) {
  if (!(varsigma > 0.0 && varsigma < 0.5)) {
    throw InvalidArgument("neighbourhood: varsigma must lie in (0, 1/2)");
  }
  const int delta = delta_of(point.kind);
  const double p = point.height;
  const double x = point.location;
  const double left_height = left ? left->height : 0.0;
  const double right_height = right ? right->height : 0.0;
  Neighborhood nb;
  nb.theta =
      p + delta * varsigma * std::min(std::abs(p - left_height), std::abs(p - right_height));
  const double theta = nb.theta;
  auto inside = [&](double y) { return delta * base.density(y) <= delta * theta; };

  double lo;
  if (left) {
    lo = left->location;
  } else {
    double step = base.bandwidth();
    lo = x - step;
    while (inside(lo)) {
      step *= 2.0;
      lo = x - step;
    }
  }
  double hi;
  if (right) {
    hi = right->location;
  } else {
    double step = base.bandwidth();
    hi = x + step;
    while (inside(hi)) {
      step *= 2.0;
      hi = x + step;
    }
  }
  nb.r = bisect_boundary(inside, lo, x);
  nb.s = bisect_boundary([&](double y) { return inside(y); }, hi, x);
  nb.r = avoid_flat(base, nb.r, x);
  nb.s = avoid_flat(base, nb.s, x);

  const double limit = std::min(x - nb.r, nb.s - x);
  const double target = std::log((p + theta) / (2.0 * p));
  const double shrink = std::log(1.0 + delta / 4.0);
  const double gamma_sq = 2.0 * p * target / (std::abs(point.curvature) * shrink);
  double eta = gamma_sq > 0.0 ? std::min(std::sqrt(gamma_sq), limit) : limit;
  for (int it = 0; it < 30 && (base.derivative(x - eta / 2.0, 1) == 0.0 ||
                               base.derivative(x + eta / 2.0, 1) == 0.0);
       ++it) {
    eta *= 1.0 - 1e-9;
  }
  nb.eta = eta;
  nb.v = x - eta / 2.0;
  nb.w = x + eta / 2.0;
  return nb;
}

const Segment* CalibrationDensity::find_segment(double x) const {
  auto it = std::upper_bound(segments_.begin(), segments_.end(), x,
                             [](double value, const Segment& s) { return value < s.lo; });
  if (it == segments_.begin()) return nullptr;
  --it;
  if (x <= it->hi) return &*it;
  return nullptr;
}

double CalibrationDensity::raw_density(double x) const {
  if (const Segment* s = find_segment(x)) return std::max(0.0, eval_segment(*s, x));
  return base_.density(x);
}

double CalibrationDensity::raw_derivative(double x) const {
  if (const Segment* s = find_segment(x)) return eval_segment_derivative(*s, x);
  return base_.derivative(x, 1);
}

double CalibrationDensity::density(double x) const { return scale_ * raw_density(x); }

double CalibrationDensity::derivative(double x) const { return scale_ * raw_derivative(x); }

void CalibrationDensity::build_table() {
  const double h = base_.bandwidth();
  const double lo = std::isfinite(lower_limit_) ? lower_limit_
                                                : base_.sample().min() - Kde::kCutoff * h;
  const double hi = std::isfinite(upper_limit_) ? upper_limit_
                                                : base_.sample().max() + Kde::kCutoff * h;
  std::vector<double> breaks{lo, hi};
  for (const Segment& s : segments_) {
    if (s.lo > lo && s.lo < hi) breaks.push_back(s.lo);
    if (s.hi > lo && s.hi < hi) breaks.push_back(s.hi);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  cells_.clear();
  cumulative_.clear();
  edge_density_.clear();
  cells_.push_back(lo);
  cumulative_.push_back(0.0);
  edge_density_.push_back(density(lo));

  auto gl_mass = [&](double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double acc = 0.0;
    for (int j = 0; j < 5; ++j) acc += kGlWeights[j] * density(mid + half * kGlNodes[j]);
    return acc * half;
  };
  // Depth-first refinement keeps cells in ascending order.
  auto add_cell = [&](auto&& self, double a, double b, double fa, double fb, int depth) -> void {
    const double mass = gl_mass(a, b);
    const double trap = 0.5 * (fa + fb) * (b - a);
    if (depth < 24 && std::abs(mass - trap) > kCellTolerance) {
      const double mid = 0.5 * (a + b);
      const double fm = density(mid);
      self(self, a, mid, fa, fm, depth + 1);
      self(self, mid, b, fm, fb, depth + 1);
      return;
    }
    cells_.push_back(b);
    cumulative_.push_back(cumulative_.back() + mass);
    edge_density_.push_back(fb);
  };
  for (std::size_t j = 0; j + 1 < breaks.size(); ++j) {
    const double a = breaks[j];
    const double b = breaks[j + 1];
    const auto pieces = static_cast<std::size_t>(std::max(4.0, std::ceil((b - a) / (h / 4.0))));
    const double step = (b - a) / static_cast<double>(pieces);
    double left = a;
    double f_left = density(a);
    for (std::size_t m = 1; m <= pieces; ++m) {
      const double right = m == pieces ? b : a + static_cast<double>(m) * step;
      const double f_right = density(right);
      add_cell(add_cell, left, right, f_left, f_right, 0);
      left = right;
      f_left = f_right;
    }
  }
}

namespace {

// Position inside a cell whose density is linear between fa and fb, scaled so
// the cell carries `mass`; `target` in [0, mass].
double invert_cell(double a, double b, double fa, double fb, double mass, double target) {
  if (!(mass > 0.0)) return a;
  const double avg = 0.5 * (fa + fb);
  if (!(avg > 0.0)) return a + (b - a) * target / mass;
  const double s = target / mass * avg;
  const double slope = fb - fa;
  const double disc = std::max(0.0, fa * fa + 2.0 * slope * s);
  const double denom = fa + std::sqrt(disc);
  const double t = denom > 0.0 ? 2.0 * s / denom : 0.0;
  return a + (b - a) * std::clamp(t, 0.0, 1.0);
}

}  // namespace

double CalibrationDensity::cdf(double x) const {
  if (x <= cells_.front()) return 0.0;
  if (x >= cells_.back()) return 1.0;
  const auto it = std::upper_bound(cells_.begin(), cells_.end(), x);
  const std::size_t j = static_cast<std::size_t>(it - cells_.begin()) - 1;
  const double a = cells_[j];
  const double b = cells_[j + 1];
  const double fa = edge_density_[j];
  const double fb = edge_density_[j + 1];
  const double mass = cumulative_[j + 1] - cumulative_[j];
  const double t = (x - a) / (b - a);
  const double avg = 0.5 * (fa + fb);
  double partial = 0.0;
  if (avg > 0.0) {
    partial = mass * (fa * t + 0.5 * (fb - fa) * t * t) / avg;
  } else {
    partial = mass * t;
  }
  return (cumulative_[j] + partial) / cumulative_.back();
}

SortedSample CalibrationDensity::sample(std::size_t n, RngStream& rng) const {
  const double total = cumulative_.back();
  if (!(std::abs(total - 1.0) <= 1e-3)) {
    std::ostringstream os;
    os << "cannot sample from an unnormalized calibration density (integral " << total << ")";
    throw InvalidArgument(os.str());
  }
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform01() * total;
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    std::size_t j = static_cast<std::size_t>(it - cumulative_.begin());
    j = std::clamp<std::size_t>(j, 1, cumulative_.size() - 1) - 1;
    out.push_back(invert_cell(cells_[j], cells_[j + 1], edge_density_[j], edge_density_[j + 1],
                              cumulative_[j + 1] - cumulative_[j], u - cumulative_[j]));
  }
  return SortedSample(std::move(out));
}

namespace {

struct TurningSelection {
  std::vector<TurningPointInfo> points;
  std::optional<NeighbourPoint> left;   // redefined x_0 (known support)
  std::optional<NeighbourPoint> right;  // redefined x_2k
};

TurningSelection select_turning_points(const Kde& base, const TurningPointSet& tps, std::size_t k,
                                       const std::optional<Interval>& support) {
  std::vector<TurningPointInfo> merged;
  for (const auto& m : tps.modes) merged.push_back({m.location, m.height, TurningKind::Mode});
  for (const auto& a : tps.antimodes) {
    merged.push_back({a.location, a.height, TurningKind::Antimode});
  }
  std::sort(merged.begin(), merged.end(),
            [](const auto& l, const auto& r) { return l.location < r.location; });

  TurningSelection sel;
  if (!support) {
    if (tps.modes.size() != k || tps.antimodes.size() + 1 != k) {
      std::ostringstream os;
      os << "KDE at h = " << base.bandwidth() << " has " << tps.modes.size() << " modes and "
         << tps.antimodes.size() << " antimodes; expected " << k << " modes";
      throw ConstructionError(construction_message(os.str()));
    }
    sel.points = std::move(merged);
    return sel;
  }

  const Interval I = *support;
  std::optional<std::size_t> first, last;
  std::size_t interior_modes = 0;
  for (std::size_t j = 0; j < merged.size(); ++j) {
    if (merged[j].kind != TurningKind::Mode || !I.contains_interior(merged[j].location)) continue;
    ++interior_modes;
    if (!first) first = j;
    last = j;
  }
  if (interior_modes != k) {
    std::ostringstream os;
    os << "KDE at h = " << base.bandwidth() << " has " << interior_modes
       << " modes inside the support; expected " << k;
    throw ConstructionError(construction_message(os.str()));
  }
  sel.points.assign(merged.begin() + static_cast<std::ptrdiff_t>(*first),
                    merged.begin() + static_cast<std::ptrdiff_t>(*last) + 1);
  if (sel.points.size() != 2 * k - 1) {
    throw ConstructionError(construction_message("turning points inside the support do not alternate"));
  }

  const double x1 = sel.points.front().location;
  const double xlast = sel.points.back().location;
  if (*first > 0) {
    // Modes below the support: x_0 is the first point from a where f' > 0.
    double x0 = I.lo;
    const double anti = merged[*first - 1].location;
    if (anti >= I.lo) x0 = anti;
    double step = 1e-6 * (x1 - x0);
    while (base.derivative(x0, 1) <= 0.0 && x0 + step < x1) {
      x0 += step;
      step *= 2.0;
    }
    sel.left = NeighbourPoint{x0, base.density(x0)};
  }
  if (*last + 1 < merged.size()) {
    double x2k = I.hi;
    const double anti = merged[*last + 1].location;
    if (anti <= I.hi) x2k = anti;
    double step = 1e-6 * (x2k - xlast);
    while (base.derivative(x2k, 1) >= 0.0 && x2k - step > xlast) {
      x2k -= step;
      step *= 2.0;
    }
    sel.right = NeighbourPoint{x2k, base.density(x2k)};
  }
  return sel;
}

void assign_curvatures(const Kde& base, std::vector<TurningPointInfo>& points, double h_plugin) {
  const SortedSample& sample = base.sample();
  const double h = base.bandwidth();
  for (TurningPointInfo& tp : points) {
    const int want = tp.kind == TurningKind::Mode ? -1 : 1;
    auto good = [&](double c) { return want < 0 ? c < 0.0 : c > 0.0; };
    double bw = h_plugin;
    double c = Kde(sample, bw).derivative(tp.location, 2);
    for (int it = 0; it < kCurvatureHalvings && !good(c); ++it) {
      bw = h + 0.5 * (bw - h);
      c = Kde(sample, bw).derivative(tp.location, 2);
      tp.sign_fallback = true;
    }
    if (!good(c)) {
      bw = h;
      c = base.derivative(tp.location, 2);
      tp.sign_fallback = true;
    }
    if (!good(c)) {
      std::ostringstream os;
      os << "second derivative at the turning point " << tp.location
         << " has the wrong sign for every bandwidth tried";
      throw ConstructionError(construction_message(os.str()));
    }
    tp.curvature = c;
    tp.curvature_bandwidth = bw;
  }
}

struct TailSolution {
  Segment zero;
  Segment link;
  double mass = 0.0;
  double target = 0.0;
  bool matched = false;
};

// Tail link from zero at the free end to the kernel estimate at `anchor`;
// `left` selects the side. Searches the free end over a span of `width`.
TailSolution solve_tail(const Kde& base, NeighbourPoint anchor, bool left, double width) {
  const double slope = base.derivative(anchor.location, 1);
  TailSolution out;
  out.target = left ? base.cdf(anchor.location) : 1.0 - base.cdf(anchor.location);
  auto build = [&](double end) {
    if (left) {
      return make_link(SegmentKind::TailLink, end, anchor.location, 0.0, anchor.height, 0.0, slope,
                       -1);
    }
    return make_link(SegmentKind::TailLink, anchor.location, end, anchor.height, 0.0, slope, 0.0,
                     -1);
  };
  auto mass_of = [&](double end) {
    const Segment s = build(end);
    return integrate([&](double y) { return std::max(0.0, eval_segment(s, y)); }, s.lo, s.hi);
  };

  std::vector<double> ends(kTailCandidates);
  std::vector<double> masses(kTailCandidates);
  for (int j = 0; j < kTailCandidates; ++j) {
    const double offset = width * static_cast<double>(j + 1) / kTailCandidates;
    ends[j] = left ? anchor.location - offset : anchor.location + offset;
    masses[j] = mass_of(ends[j]);
  }
  double end = ends[0];
  for (int j = 0; j + 1 < kTailCandidates; ++j) {
    const double e0 = masses[j] - out.target;
    const double e1 = masses[j + 1] - out.target;
    if (e0 == 0.0 || (e0 < 0.0) != (e1 < 0.0)) {
      double a = ends[j];
      double b = ends[j + 1];
      double ea = e0;
      for (int it = 0; it < 60 && ea != 0.0; ++it) {
        const double mid = 0.5 * (a + b);
        const double em = mass_of(mid) - out.target;
        if ((em < 0.0) == (ea < 0.0)) {
          a = mid;
          ea = em;
        } else {
          b = mid;
        }
      }
      end = a;
      out.matched = true;
      break;
    }
  }
  if (!out.matched) {
    int best = 0;
    for (int j = 1; j < kTailCandidates; ++j) {
      if (std::abs(masses[j] - out.target) < std::abs(masses[best] - out.target)) best = j;
    }
    end = ends[best];
  }
  out.link = build(end);
  out.mass = mass_of(end);
  out.zero.kind = SegmentKind::Zero;
  out.zero.lo = left ? -kInf : end;
  out.zero.hi = left ? end : kInf;
  return out;
}

}  // namespace

CalibrationDensity build_calibration_with_bandwidths(const SortedSample& sample, std::size_t k,
                                                     double h, double h_plugin,
                                                     const CalibrationOptions& options) {
  if (k == 0) throw InvalidArgument("calibration density: k must be at least 1");
  if (!(options.varpi > 0.0 && options.varpi < 0.25)) {
    throw InvalidArgument("calibration density: varpi must lie in (0, 1/4)");
  }
  CalibrationDensity g{Kde(sample, h)};
  const Kde& f = g.base_;
  g.k_ = k;
  g.plugin_bandwidth_ = h_plugin;
  g.varpi_ = options.varpi;
  g.support_ = options.support;

  TurningPointOptions tp_options;
  tp_options.saddle_tolerance = options.saddle_tolerance;
  const TurningPointSet tps = find_turning_points(f, tp_options);
  TurningSelection sel = select_turning_points(f, tps, k, options.support);
  assign_curvatures(f, sel.points, h_plugin);
  g.profile_ = sel.points;
  const std::size_t m = g.profile_.size();

  if (!options.varsigma.empty() && options.varsigma.size() != m) {
    throw InvalidArgument("calibration density: expected " + std::to_string(m) +
                          " varsigma values, got " + std::to_string(options.varsigma.size()));
  }

  // Known-support tails do not depend on varsigma.
  std::vector<Segment> tails;
  double tail_excess = 0.0;
  g.lower_limit_ = -kInf;
  g.upper_limit_ = kInf;
  if (options.support) {
    const double width = options.support->width();
    if (sel.left) {
      const TailSolution t = solve_tail(f, *sel.left, true, width);
      tails.push_back(t.zero);
      tails.push_back(t.link);
      tail_excess += t.mass - t.target;
      g.tail_fallback_ = g.tail_fallback_ || !t.matched;
      g.lower_limit_ = t.link.lo;
    }
    if (sel.right) {
      const TailSolution t = solve_tail(f, *sel.right, false, width);
      tails.push_back(t.link);
      tails.push_back(t.zero);
      tail_excess += t.mass - t.target;
      g.tail_fallback_ = g.tail_fallback_ || !t.matched;
      g.upper_limit_ = t.link.hi;
    }
  }
  const double left_limit = sel.left ? sel.left->location : -kInf;
  const double right_limit = sel.right ? sel.right->location : kInf;

  const bool search = options.varsigma.empty();
  const int rounds = search ? options.max_halvings + 1 : 1;
  double q_modified = 1.0;
  for (int round = 0; round < rounds; ++round) {
    g.varsigma_ = search ? std::vector<double>(m, std::ldexp(options.varsigma_start, -round))
                         : options.varsigma;
    g.halvings_ = search ? round : 0;
    g.neighborhoods_.clear();
    std::vector<Segment> segs = tails;
    for (std::size_t i = 0; i < m; ++i) {
      std::optional<NeighbourPoint> left, right;
      if (i > 0) left = NeighbourPoint{g.profile_[i - 1].location, g.profile_[i - 1].height};
      else left = sel.left;
      if (i + 1 < m) right = NeighbourPoint{g.profile_[i + 1].location, g.profile_[i + 1].height};
      else right = sel.right;
      const TurningPointInfo& tp = g.profile_[i];
      const Neighborhood nb = solve_neighborhood(f, tp, left, right, g.varsigma_[i]);
      g.neighborhoods_.push_back(nb);
      const int delta = delta_of(tp.kind);
      const int owner = static_cast<int>(i);
      const double kv = kappa_function(nb.v, tp.location, tp.height, tp.curvature, nb.eta, delta);
      const double kw = kappa_function(nb.w, tp.location, tp.height, tp.curvature, nb.eta, delta);
      const double dv =
          kappa_derivative(nb.v, tp.location, tp.height, tp.curvature, nb.eta, delta);
      const double dw =
          kappa_derivative(nb.w, tp.location, tp.height, tp.curvature, nb.eta, delta);
      segs.push_back(make_link(SegmentKind::LinkIn, nb.r, nb.v, f.density(nb.r), kv,
                               f.derivative(nb.r, 1), dv, owner));
      Segment kappa;
      kappa.kind = SegmentKind::Kappa;
      kappa.lo = nb.v;
      kappa.hi = nb.w;
      kappa.xhat = tp.location;
      kappa.p = tp.height;
      kappa.q = tp.curvature;
      kappa.eta = nb.eta;
      kappa.delta = delta;
      kappa.owner = owner;
      segs.push_back(kappa);
      segs.push_back(make_link(SegmentKind::LinkOut, nb.w, nb.s, kw, f.density(nb.s), dw,
                               f.derivative(nb.s, 1), owner));
    }

    // Saddles outside every J neighbourhood are bridged by a link.
    std::vector<double> points;
    for (double z : tps.saddles) points.push_back(z);
    for (const Neighborhood& nb : g.neighborhoods_) {
      points.push_back(nb.r);
      points.push_back(nb.s);
    }
    std::sort(points.begin(), points.end());
    double xi = kInf;
    for (std::size_t j = 1; j < points.size(); ++j) xi = std::min(xi, points[j] - points[j - 1]);
    g.saddles_.clear();
    for (double z : tps.saddles) {
      if (z <= left_limit || z >= right_limit) continue;
      bool covered = false;
      for (const Neighborhood& nb : g.neighborhoods_) covered = covered || (z > nb.r && z < nb.s);
      if (covered) continue;
      const int owner = static_cast<int>(g.saddles_.size());
      g.saddles_.push_back(z);
      const double z1 = avoid_flat(f, z - options.varpi * xi, z - xi);
      const double z2 = avoid_flat(f, z + options.varpi * xi, z + xi);
      segs.push_back(make_link(SegmentKind::Saddle, z1, z2, f.density(z1), f.density(z2),
                               f.derivative(z1, 1), f.derivative(z2, 1), owner));
    }
    std::sort(segs.begin(), segs.end(),
              [](const Segment& l, const Segment& r) { return l.lo < r.lo; });
    g.segments_ = std::move(segs);

    q_modified = 1.0;
    for (const Segment& s : g.segments_) {
      if (s.kind == SegmentKind::Zero || s.kind == SegmentKind::TailLink) continue;
      q_modified += integrate(
          [&](double y) { return std::max(0.0, eval_segment(s, y)) - f.density(y); }, s.lo, s.hi);
    }
    if (std::abs(q_modified - 1.0) <= options.q_tolerance) break;
  }

  g.q_ = q_modified + tail_excess;
  if (std::abs(g.q_ - 1.0) > options.q_tolerance) {
    g.normalization_ = Normalization::DividedByQ;
    g.scale_ = 1.0 / g.q_;
  }
  g.build_table();
  return g;
}

CalibrationDensity build_calibration(const SortedSample& sample, std::size_t k,
                                     const CalibrationOptions& options) {
  const double h = options.support ? hy_critical_bandwidth(sample, k, *options.support).h
                                   : critical_bandwidth(sample, k).h;
  return build_calibration_with_bandwidths(sample, k, h, plugin_bandwidth_second_deriv(sample),
                                           options);
}

ShapeSummary analyze_shape(const CalibrationDensity& g, std::size_t points_per_unit_h) {
  const Interval range = g.table_range();
  const double step = g.construction_bandwidth() / static_cast<double>(points_per_unit_h);
  const auto count = static_cast<std::size_t>(std::ceil(range.width() / step)) + 1;
  ShapeSummary out;
  int prev = 0;
  double prev_x = range.lo;
  for (std::size_t j = 0; j < count; ++j) {
    const double x = std::min(range.hi, range.lo + static_cast<double>(j) * step);
    const double d = g.derivative(x);
    const int s = (d > 0.0) - (d < 0.0);
    if (s == 0 || g.density(x) == 0.0) continue;
    if (prev != 0 && s != prev) {
      if (prev > 0) {
        ++out.modes;
        out.mode_locations.push_back(0.5 * (prev_x + x));
      } else {
        ++out.antimodes;
      }
    }
    prev = s;
    prev_x = x;
  }
  return out;
}

}  // namespace modetest
