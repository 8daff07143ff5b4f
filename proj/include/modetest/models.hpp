#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "modetest/distributions.hpp"
#include "modetest/kde.hpp"
#include "modetest/rng.hpp"

namespace modetest {

struct MixtureComponent {
  double weight;
  Distribution dist;
};

struct MixtureModel {
  std::string name;
  std::vector<MixtureComponent> components;
  std::size_t nominal_modes = 1;
};

// The simulation models M1..M26.
const std::vector<MixtureModel>& model_catalog();
// Lookup by name ("M4" or "4"); throws InvalidArgument for unknown ids.
const MixtureModel& find_model(const std::string& id);

double model_density(const MixtureModel& m, double x);
double model_cdf(const MixtureModel& m, double x);
double model_mean(const MixtureModel& m);
SortedSample model_sample(const MixtureModel& m, std::size_t n, RngStream& rng);

}  // namespace modetest
