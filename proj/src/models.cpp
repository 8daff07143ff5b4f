#include "modetest/models.hpp"

#include <algorithm>
#include <cctype>

#include "modetest/error.hpp"

namespace modetest {

namespace {

MixtureModel make(std::string name, std::size_t modes, std::vector<MixtureComponent> parts) {
  return {std::move(name), std::move(parts), modes};
}

std::vector<MixtureModel> build_catalog() {
  using N = Normal;
  std::vector<MixtureModel> c;
  c.push_back(make("M1", 1, {{0.44, N{0.372, 0.03}}, {0.44, N{0.67, 0.022}}, {0.12, N{0.5, 0.2}}}));
  c.push_back(make("M2", 1, {{0.9, N{0.5, 0.05}}, {0.05, N{0.197, 0.01}}, {0.05, N{0.803, 0.01}}}));
  c.push_back(make("M3", 1, {{0.6, N{0.62, 0.04}}, {0.2, N{0.218, 0.1}}, {0.2, N{0.5, 0.00795}}}));
  c.push_back(make("M4", 1, {{1.0, N{0.5, 0.05428}}}));
  c.push_back(make("M5", 1, {{0.9, N{0.5, 0.0485}}, {0.1, N{0.5, 0.47}}}));
  c.push_back(make("M6", 1, {{0.6, N{0.5, 0.0502}}, {0.2, N{0.3, 0.02}}, {0.2, N{0.7, 0.02}}}));
  c.push_back(make("M7", 1, {{0.5, Beta{10, 3}}, {0.5, N{0.5, 0.137}}}));
  c.push_back(make("M8", 1, {{0.6, N{0.4985, 0.0793}}, {0.4, Weibull{3, 0.5}}}));
  c.push_back(make("M9", 1,
                   {{0.5, N{0.5, 0.3}}, {0.45, N{0.5, 0.045}}, {0.05, N{0.5, 0.000135}}}));
  c.push_back(make("M10", 1, {{0.6, N{0.307, 0.0518}}, {0.4, Gamma{4, 8}}}));
  c.push_back(make("M11", 2, {{0.75, N{0.458, 0.0546}}, {0.25, N{0.85, 0.0041}}}));
  c.push_back(make("M12", 2, {{0.5, N{0.211, 0.012}}, {0.3, N{0.75, 0.062}}, {0.2, Beta{5, 2}}}));
  c.push_back(make("M13", 2, {{0.95, N{0.3035, 0.02}}, {0.05, N{0.96757, 0.0004}}}));
  c.push_back(make("M14", 2,
                   {{0.5, N{0.776, 0.0109}},
                    {0.3, N{0.3, 0.04}},
                    {0.1, N{0.25, 0.0025}},
                    {0.1, N{0.35, 0.0025}}}));
  c.push_back(make("M15", 2,
                   {{0.3, N{0.13, 0.1}}, {0.3, N{0.81, 0.1}}, {0.2, Gamma{3, 9}}, {0.2, Beta{7, 2}}}));
  c.push_back(make("M16", 2,
                   {{0.6, N{0.384, 0.01202}}, {0.2, N{0.2, 0.05}}, {0.2, N{0.9, 0.00272}}}));
  c.push_back(make("M17", 2, {{0.5, N{0.3, 0.0197}}, {0.5, N{0.7, 0.0197}}}));
  c.push_back(make("M18", 2, {{0.5, N{0.18, 0.007}}, {0.5, N{0.82, 0.007}}}));
  c.push_back(make("M19", 2, {{0.5, N{0.06787, 0.001}}, {0.5, N{0.93213, 0.001}}}));
  c.push_back(make("M20", 2,
                   {{0.48, N{0.06777, 0.001}},
                    {0.48, N{0.93223, 0.001}},
                    {0.02, Beta{1.1, 2.37558}},
                    {0.02, Beta{2.37558, 1.1}}}));
  c.push_back(make("M21", 3,
                   {{0.45, N{0.26, 0.01476}}, {0.33, N{0.79145, 0.01}}, {0.22, N{0.5, 0.007}}}));
  c.push_back(make("M22", 3,
                   {{0.68, N{0.6, 0.0025}}, {0.22, N{0.10245, 0.01588}}, {0.1, N{0.93, 0.0015}}}));
  c.push_back(make("M23", 3,
                   {{0.45, N{0.25, 0.015}}, {0.45, N{0.6, 0.015}}, {0.1, N{0.95222, 0.00049}}}));
  c.push_back(make("M24", 3,
                   {{0.55, N{0.5, 0.08425}},
                    {0.15, N{0.3, 0.004}},
                    {0.15, N{0.5, 0.004}},
                    {0.15, N{0.7, 0.004}}}));
  c.push_back(make("M25", 3,
                   {{0.6, N{0.7749, 0.011}}, {0.2, N{0.1345, 0.006}}, {0.2, N{0.36, 0.006}}}));
  c.push_back(make("M26", 1,
                   {{0.58, N{0.61, 0.035}},
                    {0.2, N{0.232, 0.04}},
                    {0.2, N{0.5, 0.00795}},
                    {0.01, N{0.15, 0.0028}},
                    {0.01, N{0.98, 0.0028}}}));
  return c;
}

}  // namespace

const std::vector<MixtureModel>& model_catalog() {
  static const std::vector<MixtureModel> catalog = build_catalog();
  return catalog;
}

const MixtureModel& find_model(const std::string& id) {
  std::string key = id;
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
  if (!key.empty() && std::isdigit(static_cast<unsigned char>(key.front()))) key = "M" + key;
  for (const MixtureModel& m : model_catalog()) {
    if (m.name == key) return m;
  }
  throw InvalidArgument("unknown model id '" + id + "' (expected M1..M26)");
}

double model_density(const MixtureModel& m, double x) {
  double acc = 0.0;
  for (const auto& c : m.components) acc += c.weight * pdf(c.dist, x);
  return acc;
}

double model_cdf(const MixtureModel& m, double x) {
  double acc = 0.0;
  for (const auto& c : m.components) acc += c.weight * cdf(c.dist, x);
  return acc;
}

double model_mean(const MixtureModel& m) {
  double acc = 0.0;
  for (const auto& c : m.components) acc += c.weight * mean(c.dist);
  return acc;
}

SortedSample model_sample(const MixtureModel& m, std::size_t n, RngStream& rng) {
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng.uniform01();
    std::size_t j = 0;
    while (j + 1 < m.components.size() && u >= m.components[j].weight) {
      u -= m.components[j].weight;
      ++j;
    }
    out.push_back(draw_from(rng, m.components[j].dist));
  }
  return SortedSample(std::move(out));
}

}  // namespace modetest
