#include "modetest/distributions.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "modetest/error.hpp"

namespace modetest {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    std::ostringstream os;
    os << "invalid distribution parameter: " << what << " = " << value << " (must be > 0)";
    throw InvalidArgument(os.str());
  }
}

// Marsaglia & Tsang (2000), with the shape < 1 boost.
double draw_gamma_unit_rate(RngStream& rng, double shape) {
  if (shape < 1.0) {
    const double u = rng.uniform01();
    return draw_gamma_unit_rate(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.standard_normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform01();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace

void validate(const Distribution& dist) {
  std::visit(Overloaded{
                 [](const Normal& d) {
                   if (!std::isfinite(d.mean)) throw InvalidArgument("normal mean must be finite");
                   require_positive(d.variance, "normal variance");
                 },
                 [](const Beta& d) {
                   require_positive(d.theta, "beta theta");
                   require_positive(d.phi, "beta phi");
                 },
                 [](const Gamma& d) {
                   require_positive(d.shape, "gamma shape");
                   require_positive(d.rate, "gamma rate");
                 },
                 [](const Weibull& d) {
                   require_positive(d.shape, "weibull shape");
                   require_positive(d.scale, "weibull scale");
                 },
                 [](const StudentT& d) {
                   require_positive(d.dof, "student t degrees of freedom");
                   require_positive(d.scale, "student t scale");
                 },
                 [](const Uniform& d) {
                   if (!(d.lo < d.hi)) throw InvalidArgument("uniform requires lo < hi");
                 },
             },
             dist);
}

double draw_from(RngStream& rng, const Distribution& dist) {
  validate(dist);
  return std::visit(
      Overloaded{
          [&](const Normal& d) { return d.mean + std::sqrt(d.variance) * rng.standard_normal(); },
          [&](const Beta& d) {
            const double x = draw_gamma_unit_rate(rng, d.theta);
            const double y = draw_gamma_unit_rate(rng, d.phi);
            return x / (x + y);
          },
          [&](const Gamma& d) { return draw_gamma_unit_rate(rng, d.shape) / d.rate; },
          [&](const Weibull& d) {
            const double u = rng.uniform01();
            return d.scale * std::pow(-std::log1p(-u), 1.0 / d.shape);
          },
          [&](const StudentT& d) {
            const double z = rng.standard_normal();
            const double chi2 = 2.0 * draw_gamma_unit_rate(rng, 0.5 * d.dof);
            return d.scale * z / std::sqrt(chi2 / d.dof);
          },
          [&](const Uniform& d) { return draw_uniform(rng, d.lo, d.hi); },
      },
      dist);
}

double pdf(const Distribution& dist, double x) {
  return std::visit(
      Overloaded{
          [x](const Normal& d) {
            const double z = (x - d.mean) / std::sqrt(d.variance);
            return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi * d.variance);
          },
          [x](const Beta& d) {
            if (x < 0.0 || x > 1.0) return 0.0;
            if ((x == 0.0 && d.theta < 1.0) || (x == 1.0 && d.phi < 1.0))
              return std::numeric_limits<double>::infinity();
            const double log_b =
                std::lgamma(d.theta) + std::lgamma(d.phi) - std::lgamma(d.theta + d.phi);
            return std::exp((d.theta - 1.0) * std::log(x) + (d.phi - 1.0) * std::log1p(-x) -
                            log_b);
          },
          [x](const Gamma& d) {
            if (x <= 0.0) return 0.0;
            return std::exp(d.shape * std::log(d.rate) + (d.shape - 1.0) * std::log(x) -
                            d.rate * x - std::lgamma(d.shape));
          },
          [x](const Weibull& d) {
            if (x < 0.0) return 0.0;
            const double z = x / d.scale;
            return d.shape / d.scale * std::pow(z, d.shape - 1.0) * std::exp(-std::pow(z, d.shape));
          },
          [x](const StudentT& d) {
            const double z = x / d.scale;
            const double log_c = std::lgamma(0.5 * (d.dof + 1.0)) - std::lgamma(0.5 * d.dof) -
                                 0.5 * std::log(d.dof * std::numbers::pi);
            return std::exp(log_c - 0.5 * (d.dof + 1.0) * std::log1p(z * z / d.dof)) / d.scale;
          },
          [x](const Uniform& d) { return (x >= d.lo && x < d.hi) ? 1.0 / (d.hi - d.lo) : 0.0; },
      },
      dist);
}

double cdf(const Distribution& dist, double x) {
  return std::visit(
      Overloaded{
          [x](const Normal& d) {
            return 0.5 * std::erfc(-(x - d.mean) / std::sqrt(2.0 * d.variance));
          },
          [x](const Beta& d) {
            if (x <= 0.0) return 0.0;
            if (x >= 1.0) return 1.0;
            return boost::math::ibeta(d.theta, d.phi, x);
          },
          [x](const Gamma& d) { return x <= 0.0 ? 0.0 : boost::math::gamma_p(d.shape, d.rate * x); },
          [x](const Weibull& d) {
            return x <= 0.0 ? 0.0 : -std::expm1(-std::pow(x / d.scale, d.shape));
          },
          [x](const StudentT& d) {
            const double t = x / d.scale;
            const double tail = 0.5 * boost::math::ibeta(0.5 * d.dof, 0.5, d.dof / (d.dof + t * t));
            return t < 0.0 ? tail : 1.0 - tail;
          },
          [x](const Uniform& d) {
            if (x <= d.lo) return 0.0;
            if (x >= d.hi) return 1.0;
            return (x - d.lo) / (d.hi - d.lo);
          },
      },
      dist);
}

double mean(const Distribution& dist) {
  return std::visit(Overloaded{
                        [](const Normal& d) { return d.mean; },
                        [](const Beta& d) { return d.theta / (d.theta + d.phi); },
                        [](const Gamma& d) { return d.shape / d.rate; },
                        [](const Weibull& d) { return d.scale * std::tgamma(1.0 + 1.0 / d.shape); },
                        [](const StudentT& d) {
                          return d.dof > 1.0 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
                        },
                        [](const Uniform& d) { return 0.5 * (d.lo + d.hi); },
                    },
                    dist);
}

std::string describe(const Distribution& dist) {
  std::ostringstream os;
  os.precision(17);
  std::visit(Overloaded{
                 [&](const Normal& d) { os << "N(" << d.mean << "," << d.variance << ")"; },
                 [&](const Beta& d) { os << "Beta(" << d.theta << "," << d.phi << ")"; },
                 [&](const Gamma& d) { os << "Gamma(" << d.shape << "," << d.rate << ")"; },
                 [&](const Weibull& d) { os << "Weibull(" << d.shape << "," << d.scale << ")"; },
                 [&](const StudentT& d) { os << "t(" << d.dof << ")*" << d.scale; },
                 [&](const Uniform& d) { os << "U(" << d.lo << "," << d.hi << ")"; },
             },
             dist);
  return os.str();
}

}  // namespace modetest
