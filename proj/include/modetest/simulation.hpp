#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "modetest/mode_tests.hpp"

namespace modetest {

struct SimulationSpec {
  std::vector<std::string> models;
  std::vector<std::size_t> sizes;
  std::vector<TestMethod> methods;
  std::vector<double> alphas{0.01, 0.05, 0.10};
  // Mode count under H0; unset tests each model at its own mode count (level).
  std::optional<std::size_t> k;
  std::size_t reps = 200;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  // B, excess-mass mode, support and the HY interval come from here; seed and
  // workers are overridden per replicate. HY defaults to I = [0, 1].
  TestOptions test;
};

struct SimulationCell {
  std::string model;
  std::size_t n = 0;
  std::size_t k = 1;
  TestMethod method = TestMethod::NP;
  double alpha = 0.0;
  // Replicates that produced a p-value.
  std::size_t reps = 0;
  std::size_t rejections = 0;
  // Replicates whose test raised an error; excluded from the rate.
  std::size_t failures = 0;
  double rate = 0.0;
  // 1.96 * sqrt(rate (1 - rate) / reps).
  double half_width = 0.0;
};

struct SimulationRun {
  std::string model;
  std::size_t n = 0;
  std::size_t k = 1;
  TestMethod method = TestMethod::NP;
  // NaN where the replicate failed.
  std::vector<double> pvalues;
  std::vector<double> statistics;
  std::vector<std::string> errors;
};

struct SimulationResult {
  std::vector<SimulationCell> cells;
  std::vector<SimulationRun> runs;
};

SimulationResult run_simulation(const SimulationSpec& spec);

// One row per cell: model,n,k,method,alpha,reps,rejections,failures,rate,half_width.
std::string simulation_csv(const SimulationResult& result);

}  // namespace modetest
