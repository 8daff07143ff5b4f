#include "modetest/simulation.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "modetest/error.hpp"
#include "modetest/models.hpp"

namespace modetest {

SimulationResult run_simulation(const SimulationSpec& spec) {
  if (spec.reps == 0) throw InvalidArgument("simulation needs reps >= 1");
  if (spec.models.empty() || spec.sizes.empty() || spec.methods.empty()) {
    throw InvalidArgument("simulation needs at least one model, size and method");
  }
  for (double a : spec.alphas) {
    if (!(a > 0.0 && a < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  }
  std::vector<std::size_t> model_index;
  for (const auto& id : spec.models) {
    const MixtureModel& m = find_model(id);
    model_index.push_back(static_cast<std::size_t>(&m - model_catalog().data()));
  }

  SimulationResult result;
  for (std::size_t mi : model_index) {
    const MixtureModel& model = model_catalog()[mi];
    const std::size_t k = spec.k.value_or(model.nominal_modes);
    if (k == 0) throw InvalidArgument("simulation needs k >= 1");
    for (std::size_t n : spec.sizes) {
      if (n < 4) throw InvalidArgument("simulation sample size must be at least 4");
      for (TestMethod method : spec.methods) {
        if (!supports_k(method, k)) {
          throw InvalidArgument(std::string(to_string(method)) + " cannot test " +
                                std::to_string(k) + " modes (" + model.name + ")");
        }
        SimulationRun run;
        run.model = model.name;
        run.n = n;
        run.k = k;
        run.method = method;
        run.pvalues.assign(spec.reps, std::numeric_limits<double>::quiet_NaN());
        run.statistics.assign(spec.reps, std::numeric_limits<double>::quiet_NaN());
        run.errors.assign(spec.reps, "");
        std::vector<std::vector<bool>> decisions(spec.reps);

        const std::uint64_t data_seed = derive_seed(spec.seed, {mi, n});
        const std::uint64_t test_seed =
            derive_seed(spec.seed, {mi, n, static_cast<std::uint64_t>(method) + 1});
        parallel_for(spec.reps, spec.workers, [&](std::size_t r) {
          RngStream rng(data_seed, r);
          SortedSample s = model_sample(model, n, rng);
          while (!s.distinct()) s = model_sample(model, n, rng);
          TestOptions opts = spec.test;
          opts.seed = derive_seed(test_seed, {r});
          opts.workers = 1;
          if (method == TestMethod::HY && !opts.interval) opts.interval = Interval{0.0, 1.0};
          try {
            const TestOutcome out = run_test(method, s, k, opts);
            run.pvalues[r] = out.pvalue;
            run.statistics[r] = out.statistic;
            decisions[r].reserve(spec.alphas.size());
            for (double a : spec.alphas) decisions[r].push_back(rejects(out, a));
          } catch (const Error& e) {
            run.errors[r] = e.what();
          }
        });

        for (std::size_t ai = 0; ai < spec.alphas.size(); ++ai) {
          SimulationCell cell;
          cell.model = model.name;
          cell.n = n;
          cell.k = k;
          cell.method = method;
          cell.alpha = spec.alphas[ai];
          for (std::size_t r = 0; r < spec.reps; ++r) {
            if (decisions[r].empty()) {
              ++cell.failures;
              continue;
            }
            ++cell.reps;
            if (decisions[r][ai]) ++cell.rejections;
          }
          if (cell.reps > 0) {
            const double reps = static_cast<double>(cell.reps);
            cell.rate = static_cast<double>(cell.rejections) / reps;
            cell.half_width = 1.96 * std::sqrt(cell.rate * (1.0 - cell.rate) / reps);
          } else {
            cell.rate = std::numeric_limits<double>::quiet_NaN();
            cell.half_width = std::numeric_limits<double>::quiet_NaN();
          }
          result.cells.push_back(cell);
        }
        result.runs.push_back(std::move(run));
      }
    }
  }
  return result;
}

std::string simulation_csv(const SimulationResult& result) {
  std::ostringstream os;
  os.precision(17);
  os << "model,n,k,method,alpha,reps,rejections,failures,rate,half_width\n";
  for (const auto& c : result.cells) {
    os << c.model << ',' << c.n << ',' << c.k << ',' << to_string(c.method) << ',' << c.alpha << ',' << c.reps
       << ',' << c.rejections << ',' << c.failures << ',' << c.rate << ',' << c.half_width << '\n';
  }
  return os.str();
}

}  // namespace modetest
