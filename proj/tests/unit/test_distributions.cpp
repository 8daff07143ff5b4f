#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "modetest/distributions.hpp"
#include "modetest/error.hpp"
#include "oracles.hpp"

using namespace modetest;

namespace {

std::vector<double> draws(const Distribution& d, std::size_t n, std::uint64_t seed) {
  RngStream r(seed, 0);
  std::vector<double> x(n);
  for (double& v : x) v = draw_from(r, d);
  std::sort(x.begin(), x.end());
  return x;
}

double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance_of(const std::vector<double>& x) {
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

}  // namespace

TEST_SUITE("distributions") {
  TEST_CASE("normal moments, variance parameterization") {
    const auto x = draws(Normal{0.0, 1.0}, 100000, 11);
    CHECK(std::abs(mean_of(x)) < 0.02);
    CHECK(std::abs(variance_of(x) - 1.0) < 0.03);
    const auto y = draws(Normal{2.0, 0.25}, 100000, 12);
    CHECK(std::abs(mean_of(y) - 2.0) < 0.01);
    CHECK(std::abs(variance_of(y) - 0.25) < 0.01);
  }

  TEST_CASE("beta(1,1) is uniform") {
    const auto x = draws(Beta{1.0, 1.0}, 100000, 13);
    CHECK(oracle::ks_distance(x, [](double t) { return std::clamp(t, 0.0, 1.0); }) < 0.01);
  }

  TEST_CASE("weibull mean") {
    const auto x = draws(Weibull{3.0, 0.5}, 100000, 14);
    CHECK(std::abs(mean_of(x) - 0.5 * std::tgamma(1.0 + 1.0 / 3.0)) < 0.01);
  }

  TEST_CASE("gamma uses a rate") {
    const auto x = draws(Gamma{4.0, 8.0}, 100000, 15);
    CHECK(std::abs(mean_of(x) - 0.5) < 0.005);
    CHECK(std::abs(variance_of(x) - 4.0 / 64.0) < 0.003);
  }

  TEST_CASE("KS against the analytic CDF for every family") {
    // Critical value at level 0.001 for n = 1e5 is about 1.95 / sqrt(n).
    const double crit = 1.95 / std::sqrt(100000.0);
    const std::vector<Distribution> dists{Normal{0.3, 0.02},    Beta{10, 3},     Beta{1.1, 2.37558},
                                          Gamma{3, 9},          Weibull{3, 0.5}, StudentT{3.0, 2.0},
                                          StudentT{0.5, 1.0},   Uniform{-1, 2}};
    std::uint64_t seed = 100;
    for (const auto& d : dists) {
      CAPTURE(describe(d));
      const auto x = draws(d, 100000, seed++);
      CHECK(oracle::ks_distance(x, [&](double t) { return cdf(d, t); }) < crit);
    }
  }

  TEST_CASE("pdf integrates to one and matches the CDF slope") {
    const std::vector<Distribution> dists{Normal{0.5, 0.05}, Beta{7, 2}, Gamma{3, 9}, Weibull{3, 0.5},
                                          StudentT{4.0, 0.5}};
    for (const auto& d : dists) {
      CAPTURE(describe(d));
      const double total = oracle::simpson([&](double t) { return pdf(d, t); }, -40.0, 40.0, 400000);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-5));
      for (double t : {0.2, 0.45, 0.7}) {
        const double fd = (cdf(d, t + 1e-6) - cdf(d, t - 1e-6)) / 2e-6;
        CHECK(fd == doctest::Approx(pdf(d, t)).epsilon(1e-5));
      }
    }
  }

  TEST_CASE("invalid parameters are rejected") {
    RngStream r(1, 0);
    CHECK_THROWS_AS(draw_from(r, Normal{0.0, 0.0}), InvalidArgument);
    CHECK_THROWS_AS(draw_from(r, Normal{0.0, -1.0}), InvalidArgument);
    CHECK_THROWS_AS(draw_from(r, Beta{0.0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(draw_from(r, Gamma{1.0, -2.0}), InvalidArgument);
    CHECK_THROWS_AS(draw_from(r, Weibull{-1.0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(draw_from(r, StudentT{0.0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(draw_from(r, Uniform{1.0, 1.0}), InvalidArgument);
  }
}
