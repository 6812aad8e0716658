#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "srcurv/cli.hpp"

#define STRINGIFY(x) #x
#define MACRO_STRINGIFY(x) STRINGIFY(x)

namespace py = pybind11;

namespace {

/// Run one command against a scenario JSON string; returns the run entry
/// JSON (report merging is a CLI concern).
std::string run_json(const std::string& command, const std::string& scenario,
                     const py::kwargs& kwargs) {
  srcurv::cli::CommandArgs args;
  args.command = command;
  args.scenario_text = scenario;
  for (auto& [k, v] : kwargs) {
    std::string key = py::cast<std::string>(k);
    if (key == "mode") args.mode = py::cast<std::string>(v);
    else if (key == "samples") args.samples = py::cast<int>(v);
    else if (key == "tol") args.tol = py::cast<double>(v);
    else if (key == "t") args.t = py::cast<double>(v);
    else if (key == "dt") args.dt = py::cast<double>(v);
    else if (key == "rtol") args.rtol = py::cast<double>(v);
    else if (key == "renorm_dt") args.renorm_dt = py::cast<double>(v);
    else if (key == "grid_q") args.grid_q = py::cast<int>(v);
    else if (key == "grid_sphere") args.grid_sphere = py::cast<int>(v);
    else if (key == "seed") args.seed = py::cast<std::uint64_t>(v);
    else if (key == "fixed") args.fixed_step = py::cast<bool>(v);
    else throw std::invalid_argument("unknown option: " + key);
  }
  srcurv::cli::CommandOutcome out = srcurv::cli::run_command(args);
  if (out.exit_code == 2) throw std::invalid_argument(out.report_json);
  if (out.exit_code == 3) throw std::runtime_error(out.report_json);
  return out.run_json.empty() ? out.report_json : out.run_json;
}

std::string run_csv(const std::string& command, const std::string& scenario,
                    const py::kwargs& kwargs) {
  srcurv::cli::CommandArgs args;
  args.command = command;
  args.scenario_text = scenario;
  for (auto& [k, v] : kwargs) {
    std::string key = py::cast<std::string>(k);
    if (key == "t") args.t = py::cast<double>(v);
    else if (key == "dt") args.dt = py::cast<double>(v);
    else if (key == "rtol") args.rtol = py::cast<double>(v);
    else if (key == "renorm_dt") args.renorm_dt = py::cast<double>(v);
    else if (key == "fixed") args.fixed_step = py::cast<bool>(v);
    else if (key == "seed") args.seed = py::cast<std::uint64_t>(v);
  }
  srcurv::cli::CommandOutcome out = srcurv::cli::run_command(args);
  if (out.exit_code == 2) throw std::invalid_argument(out.report_json);
  if (out.exit_code == 3) throw std::runtime_error(out.report_json);
  return out.csv;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Curvature criteria and hyperbolicity diagnostics for reduced "
            "magnetic/potential Hamiltonian flows";

  m.def("run", &run_json, py::arg("command"), py::arg("scenario"),
        "Run a command (validate, reduce, criterion, verify-theorem2, flow, "
        "lyapunov, cone) against a scenario JSON string; returns the run "
        "entry as JSON.");
  m.def("run_csv", &run_csv, py::arg("command"), py::arg("scenario"),
        "Run a time-series command and return its CSV payload.");

#ifdef VERSION_INFO
  m.attr("__version__") = MACRO_STRINGIFY(VERSION_INFO);
#else
  m.attr("__version__") = "dev";
#endif
}
