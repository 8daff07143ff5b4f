#pragma once

#include <string>
#include <variant>

#include "modetest/rng.hpp"

namespace modetest {

// N(mean, variance). The second parameter is a variance, not a standard
// deviation; simulation models are written that way.
struct Normal {
  double mean;
  double variance;
};

// Beta(theta, phi) on [0, 1].
struct Beta {
  double theta;
  double phi;
};

// Gamma(shape, rate): density rate^shape x^(shape-1) exp(-rate x) / Gamma(shape).
struct Gamma {
  double shape;
  double rate;
};

// Weibull(shape, scale): cdf 1 - exp(-(x/scale)^shape).
struct Weibull {
  double shape;
  double scale;
};

// Student t with `dof` degrees of freedom, location 0, multiplied by `scale`.
struct StudentT {
  double dof;
  double scale = 1.0;
};

// Uniform on [lo, hi).
struct Uniform {
  double lo;
  double hi;
};

using Distribution = std::variant<Normal, Beta, Gamma, Weibull, StudentT, Uniform>;

// Throws InvalidArgument when parameters are out of range.
void validate(const Distribution& dist);

double draw_from(RngStream& rng, const Distribution& dist);

double pdf(const Distribution& dist, double x);
double cdf(const Distribution& dist, double x);
double mean(const Distribution& dist);

std::string describe(const Distribution& dist);

}  // namespace modetest
