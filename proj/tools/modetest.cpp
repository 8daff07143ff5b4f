#include <chrono>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "modetest/bandwidths.hpp"
#include "modetest/calibration.hpp"
#include "modetest/error.hpp"
#include "modetest/mode_tests.hpp"
#include "modetest/report.hpp"
#include "modetest/simulation.hpp"

using nlohmann::json;
using namespace modetest;

namespace {

constexpr double kDefaultJitter = 5e-4;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n\"");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n\"");
  return s.substr(b, e - b + 1);
}

// One numeric column; an optional non-numeric header line; blank lines skipped.
std::vector<double> read_column(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
      line.erase(0, 3);
    }
    const std::string cell = trim(line.substr(0, line.find(',')));
    if (cell.empty()) continue;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
      if (out.empty() && lineno == 1) continue;  // header
      throw InvalidArgument(path + ":" + std::to_string(lineno) + ": not a number: '" + cell + "'");
    }
    out.push_back(v);
  }
  return out;
}

struct Common {
  std::string file;
  std::string method = "NP";
  std::size_t B = 500;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  std::vector<double> support;
  std::vector<double> interval;
  std::optional<double> jitter;
  std::string em_mode = "exact";
  std::size_t grid = 0;
  unsigned workers = 1;
  bool raw_pvalue = false;
  bool si_rescale = false;
  std::string lambda = "polynomial";
  bool boot_stats = true;
};

void add_common(CLI::App* cmd, Common& c, bool with_file) {
  if (with_file) cmd->add_option("file", c.file, "CSV file with one numeric column")->required();
  cmd->add_option("--method", c.method, "NP, SI, HY, FM, HH or CH")->capture_default_str();
  cmd->add_option("--boot", c.B, "Bootstrap / Monte Carlo replicates")->capture_default_str();
  cmd->add_option("--alpha", c.alpha, "Significance level")->capture_default_str();
  cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  cmd->add_option("--support", c.support, "Known support a b (NP)")->expected(2);
  cmd->add_option("--interval", c.interval, "Mode interval a b (HY)")->expected(2);
  cmd->add_option("--em-mode", c.em_mode, "Excess-mass maximization: exact or grid")
      ->check(CLI::IsMember({"exact", "grid"}))
      ->capture_default_str();
  cmd->add_option("--grid", c.grid, "Interior points per lambda cell in grid mode (0 = default)");
  cmd->add_option("--workers", c.workers, "Worker threads")->capture_default_str();
  cmd->add_flag("--raw-pvalue", c.raw_pvalue, "Report #{T* >= T} / B");
  cmd->add_flag("--si-rescale", c.si_rescale, "Variance-rescaled smoothed bootstrap for SI");
  cmd->add_option("--lambda", c.lambda, "HY correction: polynomial or monte-carlo")
      ->check(CLI::IsMember({"polynomial", "monte-carlo"}))
      ->capture_default_str();
}

void add_jitter(CLI::App* cmd, Common& c) {
  // A bare --jitter arrives as an empty string.
  cmd->add_option_function<std::vector<std::string>>(
         "--jitter",
         [&c](const std::vector<std::string>& v) {
           if (v.empty() || v.front().empty()) {
             c.jitter = kDefaultJitter;
             return;
           }
           double w = 0.0;
           const auto& t = v.front();
           const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), w);
           if (ec != std::errc() || end != t.data() + t.size()) {
             throw CLI::ValidationError("--jitter", "not a number: " + t);
           }
           c.jitter = w;
         },
         "Add U(-w, w) noise to every value (w defaults to 5e-4)")
      ->expected(0, 1)
      ->allow_extra_args(false);
}

std::optional<Interval> as_interval(const std::vector<double>& v, const char* what) {
  if (v.empty()) return std::nullopt;
  if (!(v[1] > v[0])) throw InvalidArgument(std::string(what) + " needs a < b");
  return Interval{v[0], v[1]};
}

TestOptions make_options(const Common& c) {
  TestOptions o;
  o.B = c.B;
  o.seed = c.seed;
  o.workers = c.workers == 0 ? 1 : c.workers;
  o.raw_pvalue = c.raw_pvalue;
  o.support = as_interval(c.support, "--support");
  o.interval = as_interval(c.interval, "--interval");
  o.excess_mass.mode = c.em_mode == "grid" ? ExcessMassMode::Grid : ExcessMassMode::Exact;
  o.excess_mass.grid_size = c.grid;
  o.si_rescale_variance = c.si_rescale;
  o.lambda_method = c.lambda == "monte-carlo" ? LambdaMethod::MonteCarlo : LambdaMethod::Polynomial;
  return o;
}

json parameters_json(const Common& c) {
  json p{{"method", c.method},       {"B", c.B},
         {"alpha", c.alpha},         {"em_mode", c.em_mode},
         {"grid", c.grid},           {"workers", c.workers},
         {"raw_pvalue", c.raw_pvalue}, {"si_rescale", c.si_rescale},
         {"lambda", c.lambda}};
  p["support"] = c.support.empty() ? json(nullptr) : json(c.support);
  p["interval"] = c.interval.empty() ? json(nullptr) : json(c.interval);
  return p;
}

struct LoadedData {
  SortedSample sample;
  json inputs;
};

LoadedData load(const Common& c) {
  std::vector<double> x = read_column(c.file);
  if (x.size() < 2) {
    throw InvalidArgument(c.file + ": need at least 2 observations, found " +
                          std::to_string(x.size()));
  }
  json inputs{{"file", c.file}, {"n", x.size()}};
  if (c.jitter) {
    if (!(*c.jitter > 0.0)) throw InvalidArgument("--jitter needs w > 0");
    RngStream rng(derive_seed(c.seed, {0x6a69747465ULL}), 0);
    for (double& v : x) v += draw_uniform(rng, -*c.jitter, *c.jitter);
    inputs["jitter"] = {{"distribution", "uniform"}, {"half_width", *c.jitter}};
  } else {
    inputs["jitter"] = nullptr;
  }
  SortedSample s(std::move(x));
  inputs["distinct"] = s.distinct();
  return {s, inputs};
}

void emit(const json& report, const std::string& output) {
  const std::string text = report.dump(2) + "\n";
  if (output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(output);
  if (!out) throw InvalidArgument("cannot write '" + output + "'");
  out << text;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) {
      part = trim(part);
      if (!part.empty()) out.push_back(part);
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodality tests for univariate data"};
  app.set_version_flag("--version", std::string(library_version()));
  app.require_subcommand(1);
  std::string output;
  app.add_option("-o,--output", output, "Write the JSON report here instead of stdout");

  Common test_args;
  std::size_t modes = 1;
  auto* test_cmd = app.add_subcommand("test", "Run one test of H0: the density has k modes");
  add_common(test_cmd, test_args, true);
  add_jitter(test_cmd, test_args);
  test_cmd->add_option("-k,--modes", modes, "Number of modes under H0")->capture_default_str();
  test_cmd->add_flag("!--no-boot-stats", test_args.boot_stats, "Omit bootstrap statistics");

  Common hunt_args;
  std::size_t kmax = 6;
  auto* hunt_cmd = app.add_subcommand("hunt", "Test k = 1, 2, ... until the first non-rejection");
  add_common(hunt_cmd, hunt_args, true);
  add_jitter(hunt_cmd, hunt_args);
  hunt_cmd->add_option("--kmax", kmax, "Largest k to test")->capture_default_str();

  Common sim_args;
  sim_args.B = 200;
  std::vector<std::string> sim_models;
  std::vector<std::size_t> sim_sizes;
  std::vector<std::string> sim_methods{"NP"};
  std::vector<double> sim_alphas{0.01, 0.05, 0.10};
  std::size_t reps = 200;
  std::string csv_path;
  auto* sim_cmd = app.add_subcommand("simulate", "Rejection rates on the simulation models");
  add_common(sim_cmd, sim_args, false);
  sim_cmd->add_option("--models", sim_models, "Model ids, e.g. M4,M8")->required()->delimiter(',');
  sim_cmd->add_option("--sizes", sim_sizes, "Sample sizes, e.g. 50,200")->required()->delimiter(',');
  sim_cmd->add_option("--methods", sim_methods, "Methods, e.g. NP,SI")->delimiter(',');
  sim_cmd->add_option("--alphas", sim_alphas, "Levels")->delimiter(',');
  sim_cmd->add_option("--reps", reps, "Simulated samples per cell")->capture_default_str();
  sim_cmd->add_option("--csv", csv_path, "Also write the rate table as CSV");
  std::optional<std::size_t> sim_modes;
  sim_cmd->add_option("-k,--modes", sim_modes, "Mode count under H0 (default: each model's own)");

  auto* models_cmd = app.add_subcommand("models", "Print the simulation model catalog");

  Common cal_args;
  std::size_t cal_modes = 1;
  std::size_t points = 512;
  auto* cal_cmd = app.add_subcommand("calibrate", "Dump the calibration density for a data set");
  cal_cmd->add_option("file", cal_args.file, "CSV file with one numeric column")->required();
  cal_cmd->add_option("-k,--modes", cal_modes, "Number of modes")->capture_default_str();
  cal_cmd->add_option("--support", cal_args.support, "Known support a b")->expected(2);
  cal_cmd->add_option("--seed", cal_args.seed, "Seed for jitter")->capture_default_str();
  cal_cmd->add_option("--points", points, "Plot series length")->capture_default_str();
  add_jitter(cal_cmd, cal_args);

  CLI11_PARSE(app, argc, argv);

  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (*test_cmd) {
      const LoadedData data = load(test_args);
      const TestMethod method = parse_method(test_args.method);
      const TestOptions opts = make_options(test_args);
      const TestOutcome outcome = run_test(method, data.sample, modes, opts);
      json params = parameters_json(test_args);
      params["k"] = modes;
      json results = to_json(outcome, test_args.boot_stats);
      results["reject"] = rejects(outcome, test_args.alpha);
      emit(make_report("test", test_args.seed, data.inputs, params, results, seconds_since(t0)),
           output);
    } else if (*hunt_cmd) {
      const LoadedData data = load(hunt_args);
      const TestMethod method = parse_method(hunt_args.method);
      const HuntResult hunt =
          hunt_modes(method, data.sample, kmax, hunt_args.alpha, make_options(hunt_args));
      json params = parameters_json(hunt_args);
      params["kmax"] = kmax;
      emit(make_report("hunt", hunt_args.seed, data.inputs, params,
                       to_json(hunt, hunt_args.alpha, kmax), seconds_since(t0)),
           output);
    } else if (*sim_cmd) {
      SimulationSpec spec;
      spec.models = split_list(sim_models);
      spec.sizes = sim_sizes;
      for (const auto& m : split_list(sim_methods)) spec.methods.push_back(parse_method(m));
      spec.alphas = sim_alphas;
      spec.k = sim_modes;
      spec.reps = reps;
      spec.seed = sim_args.seed;
      spec.workers = sim_args.workers == 0 ? 1 : sim_args.workers;
      spec.test = make_options(sim_args);
      const SimulationResult result = run_simulation(spec);
      json params = parameters_json(sim_args);
      params["models"] = spec.models;
      params["sizes"] = spec.sizes;
      params["methods"] = split_list(sim_methods);
      params["alphas"] = spec.alphas;
      params["reps"] = reps;
      params["k"] = sim_modes ? json(*sim_modes) : json(nullptr);
      params.erase("alpha");
      params.erase("method");
      if (!csv_path.empty()) {
        std::ofstream csv(csv_path);
        if (!csv) throw InvalidArgument("cannot write '" + csv_path + "'");
        csv << simulation_csv(result);
      }
      emit(make_report("simulate", sim_args.seed, json::object(), params, to_json(result),
                       seconds_since(t0)),
           output);
    } else if (*models_cmd) {
      emit(make_report("models", 0, json::object(), json::object(),
                       {{"models", model_catalog_json()}}, seconds_since(t0)),
           output);
    } else if (*cal_cmd) {
      const LoadedData data = load(cal_args);
      CalibrationOptions copts;
      copts.support = as_interval(cal_args.support, "--support");
      const CalibrationDensity g = build_calibration(data.sample, cal_modes, copts);
      json params{{"k", cal_modes}, {"points", points}};
      params["support"] = cal_args.support.empty() ? json(nullptr) : json(cal_args.support);
      emit(make_report("calibrate", cal_args.seed, data.inputs, params,
                       calibration_dump(g, points), seconds_since(t0)),
           output);
    }
  } catch (const modetest::Error& e) {
    std::cerr << "modetest: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "modetest: unexpected failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
