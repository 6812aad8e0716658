#pragma once

// Command workflows and machine-readable reports.  Every command yields
// a run entry {command, seed, result}; entries accumulate into a report
// file keyed by the scenario content hash (merging across differing
// hashes is refused).  Exit codes: 0 ok, 1 criterion/certificate
// violated, 2 input error, 3 numeric failure.

#include <string>
#include <vector>

#include "srcurv/scenario.hpp"

namespace srcurv::cli {

inline constexpr const char* kToolVersion = "0.1.0";

struct CommandOutcome {
  std::string report_json;  // the full report document (runs array)
  std::string run_json;     // this command's run entry
  std::string csv;          // time-series payload when applicable
  int exit_code = 0;
};

/// Options shared by the scenario commands; unset optionals fall back to
/// the scenario file values.
struct CommandArgs {
  std::string command;
  std::string scenario_path;
  std::string scenario_text;  // alternative to path (bindings)
  std::string mode;           // criterion
  int samples = 20;
  double tol = 1e-3;
  std::optional<double> t;
  std::optional<double> dt;
  std::optional<double> rtol;
  std::optional<double> renorm_dt;
  std::optional<int> grid_q;
  std::optional<int> grid_sphere;
  std::optional<std::uint64_t> seed;
  std::string out_path;      // report file (merge target)
  std::string csv_path;      // time-series output
  std::string gnuplot_prefix;
  bool fixed_step = false;
};

CommandOutcome run_command(const CommandArgs& args);

/// argv-style entry point used by the srcurv binary.
int run_cli(const std::vector<std::string>& args);

}  // namespace srcurv::cli
