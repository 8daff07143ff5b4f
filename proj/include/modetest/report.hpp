#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "modetest/calibration.hpp"
#include "modetest/mode_tests.hpp"
#include "modetest/simulation.hpp"

namespace modetest {

// Bumped whenever the report layout changes; checked by the schema test.
inline constexpr int kReportSchemaVersion = 1;

const char* library_version();

nlohmann::json to_json(const TestOutcome& outcome, bool include_boot_stats = true);
nlohmann::json to_json(const HuntResult& hunt, double alpha, std::size_t kmax);
nlohmann::json to_json(const SimulationResult& result);
nlohmann::json model_catalog_json();

// Piecewise structure of g (segment kinds, endpoints, parameters) plus plot
// series of the base KDE and g on `points` grid points.
nlohmann::json calibration_dump(const CalibrationDensity& g, std::size_t points = 512);

// Top-level report: command, version, seed, inputs, parameters, results.
// Wall-clock seconds is the only field allowed to differ between reruns.
nlohmann::json make_report(const std::string& command, std::uint64_t seed,
                           nlohmann::json inputs, nlohmann::json parameters,
                           nlohmann::json results, double wall_clock_seconds);

}  // namespace modetest
