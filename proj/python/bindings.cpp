#include <optional>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "modetest/bandwidths.hpp"
#include "modetest/calibration.hpp"
#include "modetest/error.hpp"
#include "modetest/excess_mass.hpp"
#include "modetest/kde.hpp"
#include "modetest/mode_tests.hpp"
#include "modetest/models.hpp"
#include "modetest/report.hpp"

namespace py = pybind11;
namespace mt = modetest;

namespace {

std::optional<mt::Interval> interval_of(const std::optional<std::pair<double, double>>& v) {
  if (!v) return std::nullopt;
  return mt::Interval{v->first, v->second};
}

mt::ExcessMassOptions em_options(const std::string& mode, std::size_t grid) {
  mt::ExcessMassOptions o;
  if (mode == "grid") {
    o.mode = mt::ExcessMassMode::Grid;
  } else if (mode != "exact") {
    throw mt::InvalidArgument("em_mode must be 'exact' or 'grid'");
  }
  o.grid_size = grid;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multimodality tests (compiled core)";
  m.attr("__version__") = mt::library_version();

  static py::exception<mt::Error> error(m, "Error");
  static py::exception<mt::InvalidArgument> invalid(m, "InvalidArgument", error.ptr());
  static py::exception<mt::TieError> tie(m, "TieError", error.ptr());
  static py::exception<mt::BracketError> bracket(m, "BracketError", error.ptr());
  static py::exception<mt::ConstructionError> construction(m, "ConstructionError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const mt::TieError& e) {
      py::set_error(tie, e.what());
    } catch (const mt::InvalidArgument& e) {
      py::set_error(invalid, e.what());
    } catch (const mt::BracketError& e) {
      py::set_error(bracket, e.what());
    } catch (const mt::ConstructionError& e) {
      py::set_error(construction, e.what());
    } catch (const mt::Error& e) {
      py::set_error(error, e.what());
    }
  });

  m.def("critical_bandwidth",
        [](std::vector<double> x, std::size_t k) {
          return mt::critical_bandwidth(mt::SortedSample(std::move(x)), k).h;
        },
        py::arg("data"), py::arg("k"));
  m.def("hy_critical_bandwidth",
        [](std::vector<double> x, std::size_t k, std::pair<double, double> interval) {
          return mt::hy_critical_bandwidth(mt::SortedSample(std::move(x)), k,
                                           {interval.first, interval.second})
              .h;
        },
        py::arg("data"), py::arg("k"), py::arg("interval"));
  m.def("count_modes",
        [](std::vector<double> x, double h) {
          return mt::count_modes(mt::Kde(mt::SortedSample(std::move(x)), h));
        },
        py::arg("data"), py::arg("h"));
  m.def("kde_density",
        [](std::vector<double> x, double h, const std::vector<double>& at) {
          const mt::Kde kde(mt::SortedSample(std::move(x)), h);
          std::vector<double> out;
          out.reserve(at.size());
          for (double v : at) out.push_back(kde.density(v));
          return out;
        },
        py::arg("data"), py::arg("h"), py::arg("at"));
  m.def("delta_statistic",
        [](std::vector<double> x, std::size_t k, const std::string& em_mode, std::size_t grid) {
          return mt::delta_statistic(mt::SortedSample(std::move(x)), k, em_options(em_mode, grid))
              .delta;
        },
        py::arg("data"), py::arg("k"), py::arg("em_mode") = "exact", py::arg("grid") = 0);
  m.def("dip_statistic",
        [](std::vector<double> x) { return mt::dip_statistic(mt::SortedSample(std::move(x))); },
        py::arg("data"));

  m.def("run_test_json",
        [](const std::string& method, std::vector<double> x, std::size_t k, std::size_t B,
           std::uint64_t seed, unsigned workers, std::optional<std::pair<double, double>> support,
           std::optional<std::pair<double, double>> interval, const std::string& em_mode,
           bool raw_pvalue) {
          mt::TestOptions o;
          o.B = B;
          o.seed = seed;
          o.workers = workers;
          o.support = interval_of(support);
          o.interval = interval_of(interval);
          o.excess_mass = em_options(em_mode, 0);
          o.raw_pvalue = raw_pvalue;
          mt::TestOutcome out;
          {
            py::gil_scoped_release release;
            out = mt::run_test(mt::parse_method(method), mt::SortedSample(std::move(x)), k, o);
          }
          return mt::to_json(out).dump();
        },
        py::arg("method"), py::arg("data"), py::arg("k"), py::arg("B"), py::arg("seed"),
        py::arg("workers") = 1, py::arg("support") = py::none(), py::arg("interval") = py::none(),
        py::arg("em_mode") = "exact", py::arg("raw_pvalue") = false);

  m.def("calibration_json",
        [](std::vector<double> x, std::size_t k, std::optional<std::pair<double, double>> support,
           std::size_t points) {
          mt::CalibrationOptions o;
          o.support = interval_of(support);
          const auto g = mt::build_calibration(mt::SortedSample(std::move(x)), k, o);
          return mt::calibration_dump(g, points).dump();
        },
        py::arg("data"), py::arg("k"), py::arg("support") = py::none(), py::arg("points") = 512);

  m.def("model_catalog_json", [] { return mt::model_catalog_json().dump(); });
  m.def("model_sample",
        [](const std::string& name, std::size_t n, std::uint64_t seed, std::uint64_t stream) {
          mt::RngStream rng(seed, stream);
          const auto s = mt::model_sample(mt::find_model(name), n, rng);
          return std::vector<double>(s.values().begin(), s.values().end());
        },
        py::arg("model"), py::arg("n"), py::arg("seed"), py::arg("stream") = 0);
  m.def("model_density",
        [](const std::string& name, const std::vector<double>& at) {
          const auto& model = mt::find_model(name);
          std::vector<double> out;
          out.reserve(at.size());
          for (double v : at) out.push_back(mt::model_density(model, v));
          return out;
        },
        py::arg("model"), py::arg("at"));
}
