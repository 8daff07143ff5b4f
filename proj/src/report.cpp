#include "modetest/report.hpp"

#include <cmath>

#include "modetest/distributions.hpp"
#include "modetest/models.hpp"

namespace modetest {

namespace {

// JSON has no NaN; failed replicates are written as null.
nlohmann::json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

nlohmann::json distribution_json(const Distribution& d) {
  return std::visit(
      [](const auto& x) -> nlohmann::json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Normal>) {
          return {{"family", "normal"}, {"mean", x.mean}, {"variance", x.variance}};
        } else if constexpr (std::is_same_v<T, Beta>) {
          return {{"family", "beta"}, {"theta", x.theta}, {"phi", x.phi}};
        } else if constexpr (std::is_same_v<T, Gamma>) {
          return {{"family", "gamma"}, {"shape", x.shape}, {"rate", x.rate}};
        } else if constexpr (std::is_same_v<T, Weibull>) {
          return {{"family", "weibull"}, {"shape", x.shape}, {"scale", x.scale}};
        } else if constexpr (std::is_same_v<T, StudentT>) {
          return {{"family", "t"}, {"dof", x.dof}, {"scale", x.scale}};
        } else {
          return {{"family", "uniform"}, {"lo", x.lo}, {"hi", x.hi}};
        }
      },
      d);
}

}  // namespace

const char* library_version() { return MODETEST_VERSION; }

nlohmann::json to_json(const TestOutcome& outcome, bool include_boot_stats) {
  nlohmann::json j;
  j["method"] = to_string(outcome.method);
  j["k"] = outcome.k;
  j["statistic"] = outcome.statistic;
  j["pvalue"] = outcome.pvalue;
  j["B"] = outcome.B;
  j["seed"] = outcome.seed;
  j["extras"] = nlohmann::json::object();
  for (const auto& [key, value] : outcome.extras) j["extras"][key] = number_or_null(value);
  j["notes"] = outcome.notes;
  j["flags"] = outcome.flags;
  if (include_boot_stats) j["boot_stats"] = outcome.boot_stats;
  return j;
}

nlohmann::json to_json(const HuntResult& hunt, double alpha, std::size_t kmax) {
  nlohmann::json j;
  j["alpha"] = alpha;
  j["kmax"] = kmax;
  j["steps"] = nlohmann::json::array();
  std::vector<double> pvalues;
  for (const auto& step : hunt.steps) {
    j["steps"].push_back(to_json(step, false));
    pvalues.push_back(step.pvalue);
  }
  j["pvalues"] = pvalues;
  if (hunt.concluded_k) {
    j["concluded_k"] = *hunt.concluded_k;
    j["status"] = "concluded";
  } else {
    j["concluded_k"] = nullptr;
    j["status"] = "inconclusive at kmax";
  }
  return j;
}

nlohmann::json to_json(const SimulationResult& result) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : result.cells) {
    cells.push_back({{"model", c.model},
                     {"n", c.n},
                     {"k", c.k},
                     {"method", to_string(c.method)},
                     {"alpha", c.alpha},
                     {"reps", c.reps},
                     {"rejections", c.rejections},
                     {"failures", c.failures},
                     {"rate", number_or_null(c.rate)},
                     {"half_width", number_or_null(c.half_width)}});
  }
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : result.runs) {
    nlohmann::json p = nlohmann::json::array();
    nlohmann::json s = nlohmann::json::array();
    nlohmann::json errors = nlohmann::json::array();
    for (std::size_t i = 0; i < r.pvalues.size(); ++i) {
      p.push_back(number_or_null(r.pvalues[i]));
      s.push_back(number_or_null(r.statistics[i]));
      if (!r.errors[i].empty()) errors.push_back({{"rep", i}, {"message", r.errors[i]}});
    }
    runs.push_back({{"model", r.model},
                    {"n", r.n},
                    {"k", r.k},
                    {"method", to_string(r.method)},
                    {"pvalues", p},
                    {"statistics", s},
                    {"errors", errors}});
  }
  return {{"cells", cells}, {"runs", runs}};
}

nlohmann::json model_catalog_json() {
  nlohmann::json out = nlohmann::json::array();
  for (const MixtureModel& m : model_catalog()) {
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : m.components) {
      nlohmann::json cj = distribution_json(c.dist);
      cj["weight"] = c.weight;
      comps.push_back(cj);
    }
    out.push_back({{"name", m.name}, {"nominal_modes", m.nominal_modes}, {"components", comps}});
  }
  return out;
}

nlohmann::json calibration_dump(const CalibrationDensity& g, std::size_t points) {
  nlohmann::json j;
  j["k"] = g.k();
  j["h_k"] = g.construction_bandwidth();
  j["h_plugin"] = g.plugin_bandwidth();
  j["varsigma"] = g.varsigma();
  j["varpi"] = g.varpi();
  j["q"] = g.q();
  j["normalization"] = g.normalization() == Normalization::Raw ? "raw" : "divided_by_q";
  j["halvings"] = g.halvings();
  j["tail_fallback"] = g.tail_fallback();
  if (g.support()) {
    j["support"] = {g.support()->lo, g.support()->hi};
  } else {
    j["support"] = nullptr;
  }

  nlohmann::json tps = nlohmann::json::array();
  for (std::size_t i = 0; i < g.profile().size(); ++i) {
    const auto& tp = g.profile()[i];
    const auto& nb = g.neighborhoods()[i];
    tps.push_back({{"location", tp.location},
                   {"height", tp.height},
                   {"kind", tp.kind == TurningKind::Mode ? "mode" : "antimode"},
                   {"curvature", tp.curvature},
                   {"curvature_bandwidth", tp.curvature_bandwidth},
                   {"sign_fallback", tp.sign_fallback},
                   {"d_ratio", tp.d_ratio()},
                   {"theta", nb.theta},
                   {"r", nb.r},
                   {"s", nb.s},
                   {"eta", nb.eta},
                   {"v", nb.v},
                   {"w", nb.w}});
  }
  j["turning_points"] = tps;
  j["saddles"] = g.saddles();

  nlohmann::json segs = nlohmann::json::array();
  for (const Segment& s : g.segments()) {
    nlohmann::json sj{{"kind", to_string(s.kind)}, {"lo", s.lo}, {"hi", s.hi}, {"owner", s.owner}};
    switch (s.kind) {
      case SegmentKind::Kappa:
        sj["params"] = {{"xhat", s.xhat}, {"p", s.p}, {"q", s.q}, {"eta", s.eta},
                        {"delta", s.delta}};
        break;
      case SegmentKind::LinkIn:
      case SegmentKind::LinkOut:
      case SegmentKind::Saddle:
      case SegmentKind::TailLink:
        sj["params"] = {{"u", s.u},   {"v", s.v},   {"a0", s.a0},
                        {"a1", s.a1}, {"b0", s.b0}, {"b1", s.b1}};
        break;
      default:
        sj["params"] = nlohmann::json::object();
    }
    segs.push_back(sj);
  }
  j["segments"] = segs;

  const Interval range = g.table_range();
  const double lo = std::max(range.lo, g.base().sample().min() - 3.0 * g.construction_bandwidth());
  const double hi = std::min(range.hi, g.base().sample().max() + 3.0 * g.construction_bandwidth());
  std::vector<double> xs, fs, gs;
  const std::size_t m = std::max<std::size_t>(points, 2);
  for (std::size_t i = 0; i < m; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(m - 1);
    xs.push_back(x);
    fs.push_back(g.base().density(x));
    gs.push_back(g.density(x));
  }
  j["series"] = {{"x", xs}, {"kde", fs}, {"g", gs}};
  return j;
}

nlohmann::json make_report(const std::string& command, std::uint64_t seed,
                           nlohmann::json inputs, nlohmann::json parameters,
                           nlohmann::json results, double wall_clock_seconds) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["library_version"] = library_version();
  j["command"] = command;
  j["seed"] = seed;
  j["inputs"] = std::move(inputs);
  j["parameters"] = std::move(parameters);
  j["results"] = std::move(results);
  j["wall_clock_seconds"] = wall_clock_seconds;
  return j;
}

}  // namespace modetest
