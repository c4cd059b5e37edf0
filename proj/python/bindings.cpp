#include <array>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "plausim/errors.hpp"
#include "plausim/metrics.hpp"
#include "plausim/pipeline.hpp"
#include "plausim/pose_io.hpp"

namespace py = pybind11;
using namespace plausim;

namespace {

std::vector<Vec3> to_points(const std::vector<std::array<double, 3>>& pts) {
  std::vector<Vec3> out;
  for (const auto& p : pts) out.emplace_back(p[0], p[1], p[2]);
  return out;
}

std::vector<std::string> run(const std::string& config_path, const std::string& mode, std::optional<std::uint64_t> seed,
                             std::optional<int> threads, std::optional<std::string> out) {
  RunConfig c = load_config(config_path);
  if (seed) c.seed = *seed;
  if (threads) c.threads = *threads;
  if (out) c.output = *out;
  RunOutcome outcome;
  {
    py::gil_scoped_release release;
    if (mode == "evaluate")
      outcome = run_evaluate(c);
    else if (mode == "simulate")
      outcome = run_simulate(c);
    else if (mode == "metrics")
      outcome = run_metrics_only(c);
    else
      throw InvalidArgument("mode must be 'evaluate', 'simulate' or 'metrics'");
  }
  std::vector<std::string> reports;
  for (const auto& r : outcome.reports) reports.push_back(serialize_report(r));
  return reports;
}

}  // namespace

PYBIND11_MODULE(_plausim, m) {
  m.doc() = "Physical plausibility metrics for 3D pose sequences";

  static py::exception<Error> error(m, "PlausimError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), e.what());
    }
  });

  m.def(
      "validate_file",
      [](const std::string& path) {
        const ValidationIssue issue = validate_file(path);
        py::dict d;
        d["file"] = path;
        d["kind"] = issue.kind;
        d["valid"] = issue.message.empty();
        d["message"] = issue.message;
        d["exit_code"] = issue.exit_code;
        return d;
      },
      py::arg("path"));

  m.def(
      "com_distance",
      [](const std::vector<std::array<double, 3>>& kinematic, const std::vector<std::array<double, 3>>& simulated) {
        return com_distance(to_points(kinematic), to_points(simulated));
      },
      py::arg("kinematic"), py::arg("simulated"), "Mean CoM distance in mm.");

  m.def(
      "convex_hull",
      [](const std::vector<std::array<double, 2>>& points) {
        std::vector<Vec2> pts;
        for (const auto& p : points) pts.emplace_back(p[0], p[1]);
        std::vector<std::array<double, 2>> out;
        for (const Vec2& p : convex_hull(pts)) out.push_back({p.x(), p.y()});
        return out;
      },
      py::arg("points"));

  m.def("run", &run, py::arg("config"), py::arg("mode") = "evaluate", py::arg("seed") = std::nullopt,
        py::arg("threads") = std::nullopt, py::arg("out") = std::nullopt,
        "Runs the pipeline and returns one serialized report per sequence.");

  m.attr("schema_version") = kSchemaVersion;
}
