#include "modetest/mode_tests.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

#include <boost/math/tools/roots.hpp>

#include "modetest/bandwidths.hpp"
#include "modetest/distributions.hpp"
#include "modetest/error.hpp"

namespace modetest {

const char* to_string(TestMethod method) {
  switch (method) {
    case TestMethod::NP: return "NP";
    case TestMethod::SI: return "SI";
    case TestMethod::HY: return "HY";
    case TestMethod::FM: return "FM";
    case TestMethod::HH: return "HH";
    case TestMethod::CH: return "CH";
  }
  return "?";
}

TestMethod parse_method(const std::string& name) {
  std::string key = name;
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (TestMethod m : {TestMethod::NP, TestMethod::SI, TestMethod::HY, TestMethod::FM,
                       TestMethod::HH, TestMethod::CH}) {
    if (key == to_string(m)) return m;
  }
  throw InvalidArgument("unknown method '" + name + "' (expected NP, SI, HY, FM, HH or CH)");
}

bool supports_k(TestMethod method, std::size_t k) {
  if (k == 0) return false;
  switch (method) {
    case TestMethod::HY:
    case TestMethod::HH:
    case TestMethod::CH: return k == 1;
    default: return true;
  }
}

void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = count;
  std::exception_ptr failure;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(body);
  body();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<double> run_replicates(std::size_t B, std::uint64_t seed, unsigned workers,
                                   const std::function<double(std::size_t, RngStream&)>& replicate) {
  std::vector<double> out(B);
  parallel_for(B, workers, [&](std::size_t b) {
    RngStream rng(seed, b);
    out[b] = replicate(b, rng);
  });
  return out;
}

double bootstrap_pvalue(double statistic, const std::vector<double>& boot, bool raw) {
  const auto count = static_cast<double>(
      std::count_if(boot.begin(), boot.end(), [&](double t) { return t >= statistic; }));
  if (raw) {
    if (boot.empty()) throw InvalidArgument("raw p-value needs at least one replicate");
    return count / static_cast<double>(boot.size());
  }
  return (1.0 + count) / (static_cast<double>(boot.size()) + 1.0);
}

SortedSample smoothed_resample(const SortedSample& sample, double h, RngStream& rng,
                               bool rescale_variance) {
  const std::size_t n = sample.size();
  const double mean = sample.mean();
  const double factor =
      rescale_variance && n > 1 ? 1.0 / std::sqrt(1.0 + h * h / sample.variance()) : 1.0;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto idx = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(n));
    if (idx >= n) idx = n - 1;
    const double y = sample[idx] + h * rng.standard_normal();
    out[i] = rescale_variance ? mean + (y - mean) * factor : y;
  }
  return SortedSample(std::move(out));
}

namespace {

void require_boot(const TestOptions& options, const char* where) {
  if (options.B == 0) throw InvalidArgument(std::string(where) + ": B must be at least 1");
}

// Redraws until the sample has no ties. Continuous draws tie with probability
// zero, but double rounding makes it possible.
template <class Draw>
SortedSample distinct_draw(Draw draw) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    SortedSample s = draw();
    if (s.distinct()) return s;
  }
  throw Error("resample kept producing tied values");
}

TestOutcome make_outcome(TestMethod method, std::size_t k, const TestOptions& options) {
  TestOutcome out;
  out.method = method;
  out.k = k;
  out.B = options.B;
  out.seed = options.seed;
  return out;
}

void finish(TestOutcome& out, const TestOptions& options) {
  out.pvalue = bootstrap_pvalue(out.statistic, out.boot_stats, options.raw_pvalue);
  if (options.raw_pvalue) out.flags.push_back("raw_pvalue");
}

}  // namespace

TestOutcome test_np(const SortedSample& sample, std::size_t k, const TestOptions& options) {
  require_boot(options, "NP test");
  if (k == 0) throw InvalidArgument("NP test: k must be at least 1");
  sample.require_size(k + 2, "NP test");
  sample.require_distinct("NP test");

  TestOutcome out = make_outcome(TestMethod::NP, k, options);
  const ExcessMassResult observed = delta_statistic(sample, k, options.excess_mass);
  out.statistic = observed.delta;
  if (observed.descent_tie) out.flags.push_back("descent_tie");
  if (options.excess_mass.mode == ExcessMassMode::Grid) {
    out.extras["grid_size"] = static_cast<double>(observed.grid_size);
  }

  CalibrationOptions copts = options.calibration;
  if (options.support) copts.support = options.support;
  const CalibrationDensity g = build_calibration(sample, k, copts);

  out.extras["h_k"] = g.construction_bandwidth();
  out.extras["h_plugin"] = g.plugin_bandwidth();
  out.extras["q"] = g.q();
  out.extras["varsigma"] = g.varsigma().empty() ? 0.0 : g.varsigma().front();
  out.extras["halvings"] = g.halvings();
  if (g.support()) {
    out.extras["support_lo"] = g.support()->lo;
    out.extras["support_hi"] = g.support()->hi;
  }
  if (g.normalization() == Normalization::DividedByQ) out.flags.push_back("divided_by_q");
  if (g.tail_fallback()) out.flags.push_back("tail_fallback");
  for (const auto& tp : g.profile()) {
    if (tp.sign_fallback) {
      out.flags.push_back("curvature_sign_fallback");
      break;
    }
  }
  if (k > 1) {
    out.notes["caveat"] = "level is not controlled when k exceeds the true number of modes";
  }

  const std::size_t n = sample.size();
  out.boot_stats = run_replicates(options.B, options.seed, options.workers,
                                  [&](std::size_t, RngStream& rng) {
                                    const SortedSample s =
                                        distinct_draw([&] { return g.sample(n, rng); });
                                    return delta_statistic(s, k, options.excess_mass).delta;
                                  });
  finish(out, options);
  return out;
}

TestOutcome test_silverman(const SortedSample& sample, std::size_t k, const TestOptions& options) {
  require_boot(options, "SI test");
  if (k == 0) throw InvalidArgument("SI test: k must be at least 1");
  sample.require_size(k + 2, "SI test");
  TestOutcome out = make_outcome(TestMethod::SI, k, options);
  const double h = critical_bandwidth(sample, k).h;
  out.statistic = h;
  out.extras["h_k"] = h;
  if (options.si_rescale_variance) out.flags.push_back("variance_rescaled");
  out.boot_stats = run_replicates(options.B, options.seed, options.workers,
                                  [&](std::size_t, RngStream& rng) {
                                    const SortedSample s = smoothed_resample(
                                        sample, h, rng, options.si_rescale_variance);
                                    return critical_bandwidth(s, k).h;
                                  });
  finish(out, options);
  return out;
}

double hall_york_lambda(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  const double a2 = alpha * alpha;
  const double a3 = a2 * alpha;
  const double num = 0.94029 * a3 - 1.59914 * a2 + 0.17695 * alpha + 0.48971;
  const double den = a3 - 1.77793 * a2 + 0.36162 * alpha + 0.42423;
  return num / den;
}

namespace {

constexpr Interval kLambdaMcInterval{-2.5, 2.5};

// For each simulated N(0,1) sample, the sorted ratios h*_I / h_I.
std::vector<std::vector<double>> lambda_mc_ratios(std::size_t n, std::size_t samples,
                                                  std::size_t boot, std::uint64_t seed,
                                                  unsigned workers) {
  if (samples == 0 || boot == 0) throw InvalidArgument("Monte Carlo lambda needs samples and B'");
  std::vector<std::vector<double>> ratios(samples);
  const std::uint64_t base = derive_seed(seed, {0x4859ULL});
  parallel_for(samples, workers, [&](std::size_t m) {
    RngStream rng(base, m);
    std::vector<double> x(n);
    for (double& v : x) v = rng.standard_normal();
    const SortedSample s(std::move(x));
    const double h = hy_critical_bandwidth(s, 1, kLambdaMcInterval).h;
    std::vector<double> r(boot);
    for (std::size_t b = 0; b < boot; ++b) {
      const SortedSample sb = smoothed_resample(s, h, rng);
      r[b] = hy_critical_bandwidth(sb, 1, kLambdaMcInterval).h / h;
    }
    std::sort(r.begin(), r.end());
    ratios[m] = std::move(r);
  });
  return ratios;
}

double lambda_from_ratios(const std::vector<std::vector<double>>& ratios, double alpha) {
  // Per sample: smallest lambda at which P*(h* <= lambda h) >= 1 - alpha.
  std::vector<double> thresholds;
  thresholds.reserve(ratios.size());
  for (const auto& r : ratios) {
    const auto need = static_cast<std::size_t>(
        std::ceil((1.0 - alpha) * static_cast<double>(r.size()) - 1e-9));
    thresholds.push_back(r[std::clamp<std::size_t>(need, 1, r.size()) - 1]);
  }
  std::sort(thresholds.begin(), thresholds.end());
  // Rejection fraction at lambda is #{threshold <= lambda} / M; take the
  // largest lambda keeping it at most alpha.
  const auto allowed = static_cast<std::size_t>(
      std::floor(alpha * static_cast<double>(thresholds.size()) + 1e-9));
  if (allowed == 0) return thresholds.front() * (1.0 - 1e-12);
  if (allowed >= thresholds.size()) return thresholds.back();
  return thresholds[allowed] * (1.0 - 1e-12);
}

double fraction_at_most(const std::vector<double>& values, double bound) {
  const auto count = std::count_if(values.begin(), values.end(),
                                   [&](double v) { return v <= bound; });
  return static_cast<double>(count) / static_cast<double>(values.size());
}

constexpr double kHyAlphaStep = 0.001;
constexpr int kHyAlphaSteps = 250;

}  // namespace

double hall_york_lambda_mc(double alpha, std::size_t n, std::size_t samples, std::size_t boot,
                           std::uint64_t seed, unsigned workers) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  return lambda_from_ratios(lambda_mc_ratios(n, samples, boot, seed, workers), alpha);
}

TestOutcome test_hall_york(const SortedSample& sample, const TestOptions& options) {
  require_boot(options, "HY test");
  if (!options.interval) throw InvalidArgument("HY test: an interval is required");
  const Interval I = *options.interval;
  if (!(I.hi > I.lo)) throw InvalidArgument("HY test: interval must have positive width");
  sample.require_size(3, "HY test");

  TestOutcome out = make_outcome(TestMethod::HY, 1, options);
  const CriticalBandwidthResult crit = hy_critical_bandwidth(sample, 1, I);
  out.statistic = crit.h;
  out.extras["h_hy"] = crit.h;
  out.extras["interval_lo"] = I.lo;
  out.extras["interval_hi"] = I.hi;
  if (crit.swept) out.flags.push_back("bandwidth_swept");

  out.boot_stats = run_replicates(options.B, options.seed, options.workers,
                                  [&](std::size_t, RngStream& rng) {
                                    const SortedSample s = smoothed_resample(sample, crit.h, rng);
                                    return hy_critical_bandwidth(s, 1, I).h;
                                  });

  std::vector<double> lambdas(kHyAlphaSteps);
  if (options.lambda_method == LambdaMethod::Polynomial) {
    out.notes["lambda_method"] = "polynomial";
    for (int i = 0; i < kHyAlphaSteps; ++i) lambdas[i] = hall_york_lambda((i + 1) * kHyAlphaStep);
  } else {
    out.notes["lambda_method"] = "monte-carlo";
    const auto ratios = lambda_mc_ratios(sample.size(), options.lambda_mc_samples,
                                         options.lambda_mc_boot, options.seed, options.workers);
    for (int i = 0; i < kHyAlphaSteps; ++i) {
      lambdas[i] = lambda_from_ratios(ratios, (i + 1) * kHyAlphaStep);
    }
  }
  out.extras["lambda_alpha_0.05"] = lambdas[49];
  out.lambda_grid = lambdas;
  out.pvalue = 1.0;
  for (int i = 0; i < kHyAlphaSteps; ++i) {
    const double alpha = (i + 1) * kHyAlphaStep;
    if (fraction_at_most(out.boot_stats, lambdas[i] * crit.h) >= 1.0 - alpha) {
      out.pvalue = alpha;
      break;
    }
  }
  out.notes["pvalue_definition"] = "smallest rejecting alpha on the grid 0.001..0.25";
  return out;
}

double fisher_marron_statistic(const SortedSample& sample, double h) {
  const std::size_t n = sample.size();
  if (n == 0) throw InvalidArgument("Fisher-Marron statistic: empty sample");
  const Kde kde(sample, h);
  const double dn = static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = kde.cdf(sample[i]) - (2.0 * static_cast<double>(i) + 1.0) / (2.0 * dn);
    acc += e * e;
  }
  return acc + 1.0 / (12.0 * dn);
}

TestOutcome test_fisher_marron(const SortedSample& sample, std::size_t k,
                               const TestOptions& options) {
  require_boot(options, "FM test");
  if (k == 0) throw InvalidArgument("FM test: k must be at least 1");
  sample.require_size(k + 2, "FM test");
  TestOutcome out = make_outcome(TestMethod::FM, k, options);
  const double h = critical_bandwidth(sample, k).h;
  out.statistic = fisher_marron_statistic(sample, h);
  out.extras["h_k"] = h;
  out.notes["bootstrap"] = "resamples from the critical-bandwidth KDE; h_k re-estimated per resample";
  out.boot_stats = run_replicates(options.B, options.seed, options.workers,
                                  [&](std::size_t, RngStream& rng) {
                                    const SortedSample s = smoothed_resample(sample, h, rng);
                                    return fisher_marron_statistic(s, critical_bandwidth(s, k).h);
                                  });
  finish(out, options);
  return out;
}

TestOutcome test_hartigan(const SortedSample& sample, const TestOptions& options) {
  require_boot(options, "HH test");
  sample.require_size(2, "HH test");
  sample.require_distinct("HH test");
  TestOutcome out = make_outcome(TestMethod::HH, 1, options);
  out.statistic = dip_statistic(sample);
  const std::size_t n = sample.size();
  out.boot_stats = run_replicates(options.B, options.seed, options.workers,
                                  [&](std::size_t, RngStream& rng) {
                                    const SortedSample s = distinct_draw([&] {
                                      std::vector<double> u(n);
                                      for (double& v : u) v = rng.uniform01();
                                      return SortedSample(std::move(u));
                                    });
                                    return dip_statistic(s);
                                  });
  finish(out, options);
  return out;
}

double beta_family_d(double kappa) {
  if (!(kappa > 1.0)) throw InvalidArgument("Beta family needs kappa > 1");
  // log of 8 (kappa - 1) 16^(kappa - 1) B(kappa, kappa)^2
  const double lbeta = 2.0 * std::lgamma(kappa) - std::lgamma(2.0 * kappa);
  return std::exp(std::log(8.0 * (kappa - 1.0)) + (kappa - 1.0) * std::log(16.0) + 2.0 * lbeta);
}

double t_family_d(double nu) {
  if (!(nu > 0.0)) throw InvalidArgument("t family needs nu > 0");
  const double log_c = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                       0.5 * std::log(nu * std::numbers::pi);
  return (nu + 1.0) / nu * std::exp(-2.0 * log_c);
}

namespace {

constexpr double kKappaMin = 1.0 + 1e-6;
constexpr double kKappaMax = 1e8;
constexpr double kNuMin = 0.25;
constexpr double kNuMax = 1e8;

// Solves family_d(param) = target on [lo, hi] in log-parameter space; family_d
// is monotone (increasing for Beta, decreasing for t).
template <class F>
double solve_family(F family_d, double target, double lo, double hi) {
  auto f = [&](double log_p) { return family_d(std::exp(log_p)) - target; };
  boost::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(
      f, std::log(lo), std::log(hi), boost::math::tools::eps_tolerance<double>(50), iters);
  return std::exp(0.5 * (r.first + r.second));
}

}  // namespace

ChengHallFamily cheng_hall_family(double d_hat) {
  if (!(d_hat > 0.0) || !std::isfinite(d_hat)) throw InvalidArgument("CH family needs a positive finite d");
  const double two_pi = 2.0 * std::numbers::pi;
  ChengHallFamily out;
  if (d_hat < two_pi) {
    out.name = "beta";
    if (d_hat <= beta_family_d(kKappaMin)) {
      out.parameter = kKappaMin;
      out.clamped = true;
    } else if (d_hat >= beta_family_d(kKappaMax)) {
      out.parameter = kKappaMax;
      out.clamped = true;
    } else {
      out.parameter = solve_family(beta_family_d, d_hat, kKappaMin, kKappaMax);
    }
    out.dist = Beta{out.parameter, out.parameter};
  } else if (d_hat > two_pi) {
    out.name = "t";
    if (d_hat >= t_family_d(kNuMin)) {
      out.parameter = kNuMin;
      out.clamped = true;
    } else if (d_hat <= t_family_d(kNuMax)) {
      out.parameter = kNuMax;
      out.clamped = true;
    } else {
      out.parameter = solve_family(t_family_d, d_hat, kNuMin, kNuMax);
    }
    out.dist = StudentT{out.parameter, 1.0};
  }
  return out;
}

TestOutcome test_cheng_hall(const SortedSample& sample, const TestOptions& options) {
  require_boot(options, "CH test");
  sample.require_size(3, "CH test");
  sample.require_distinct("CH test");
  TestOutcome out = make_outcome(TestMethod::CH, 1, options);
  out.statistic = delta_statistic(sample, 1, options.excess_mass).delta;

  const double h = normal_reference_bandwidth(sample);
  const double h2 = normal_reference_bandwidth_second_deriv(sample);
  const Kde f(sample, h);
  const TurningPointSet tps = find_turning_points(f);
  if (tps.modes.empty()) throw Error("CH test: the pilot KDE has no mode");
  const TurningPoint top = *std::max_element(
      tps.modes.begin(), tps.modes.end(),
      [](const TurningPoint& a, const TurningPoint& b) { return a.height < b.height; });
  const double fx = f.density(top.location);
  const double d_hat = std::abs(Kde(sample, h2).derivative(top.location, 2)) / (fx * fx * fx);
  out.extras["h"] = h;
  out.extras["h_second_deriv"] = h2;
  out.extras["mode"] = top.location;
  out.extras["d_hat"] = d_hat;

  const ChengHallFamily fam = cheng_hall_family(d_hat);
  out.notes["family"] = fam.name;
  if (fam.name != "normal") out.extras["kappa"] = fam.parameter;
  if (fam.clamped) out.flags.push_back("family_parameter_clamped");
  const Distribution family = fam.dist;

  const std::size_t n = sample.size();
  out.boot_stats = run_replicates(options.B, options.seed, options.workers,
                                  [&](std::size_t, RngStream& rng) {
                                    const SortedSample s = distinct_draw([&] {
                                      std::vector<double> x(n);
                                      for (double& v : x) v = draw_from(rng, family);
                                      return SortedSample(std::move(x));
                                    });
                                    return delta_statistic(s, 1, options.excess_mass).delta;
                                  });
  finish(out, options);
  return out;
}

TestOutcome run_test(TestMethod method, const SortedSample& sample, std::size_t k,
                     const TestOptions& options) {
  if (!supports_k(method, k)) {
    throw InvalidArgument(std::string(to_string(method)) + " test supports k = 1 only");
  }
  switch (method) {
    case TestMethod::NP: return test_np(sample, k, options);
    case TestMethod::SI: return test_silverman(sample, k, options);
    case TestMethod::HY: return test_hall_york(sample, options);
    case TestMethod::FM: return test_fisher_marron(sample, k, options);
    case TestMethod::HH: return test_hartigan(sample, options);
    case TestMethod::CH: return test_cheng_hall(sample, options);
  }
  throw InvalidArgument("unknown method");
}

bool rejects(const TestOutcome& outcome, double alpha) {
  if (outcome.method != TestMethod::HY) return outcome.pvalue <= alpha;
  if (outcome.boot_stats.empty()) return false;
  double lambda;
  const int step = static_cast<int>(std::lround(alpha / kHyAlphaStep));
  if (std::abs(step * kHyAlphaStep - alpha) < 1e-12 && step >= 1 &&
      static_cast<std::size_t>(step) <= outcome.lambda_grid.size()) {
    lambda = outcome.lambda_grid[static_cast<std::size_t>(step) - 1];
  } else {
    lambda = hall_york_lambda(alpha);
  }
  return fraction_at_most(outcome.boot_stats, lambda * outcome.statistic) >= 1.0 - alpha;
}

HuntResult hunt_modes(TestMethod method, const SortedSample& sample, std::size_t kmax,
                      double alpha, const TestOptions& options) {
  if (kmax == 0) throw InvalidArgument("kmax must be at least 1");
  HuntResult result;
  for (std::size_t k = 1; k <= kmax; ++k) {
    if (!supports_k(method, k)) break;
    result.steps.push_back(run_test(method, sample, k, options));
    if (!rejects(result.steps.back(), alpha)) {
      result.concluded_k = k;
      break;
    }
  }
  return result;
}

}  // namespace modetest
