#include "srcurv/cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "srcurv/grassmann.hpp"
#include "srcurv/hyperbolic.hpp"

namespace srcurv::cli {

using nlohmann::json;

namespace {

json vec_to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (int j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

json criterion_to_json(const curvature::CriterionReport& rep) {
  json r;
  r["mode"] = curvature::mode_token(rep.mode);
  r["applicable"] = rep.applicable;
  r["satisfied"] = rep.satisfied;
  r["sup_value"] = rep.sup_value;
  r["margin"] = rep.margin;
  if (rep.mode != curvature::CriterionMode::kPointwise) {
    r["k_max"] = rep.k_max;
    r["lhs_positive"] = rep.lhs_positive;
    r["unsatisfiable"] = rep.unsatisfiable;
    if (rep.magnetic_bound_terms)
      r["global_bound_terms_at_argmax"] = *rep.magnetic_bound_terms;
  }
  if (rep.argmax_q.size()) {
    r["argmax"]["q"] = vec_to_json(rep.argmax_q);
    r["argmax"]["w"] = vec_to_json(rep.argmax_w);
    r["argmax"]["v"] = vec_to_json(rep.argmax_v);
  }
  r["grid"]["q"] = rep.grid_q;
  r["grid"]["sphere"] = rep.grid_sphere;
  return r;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write file: " + path);
  f << content;
}

/// Merge this run into the report document at out_path (if any), refusing
/// mismatched scenario hashes.
json merge_report(const std::string& out_path, const std::string& hash,
                  const json& scenario_echo, const json& run) {
  json doc;
  bool existing = false;
  if (!out_path.empty()) {
    std::ifstream f(out_path);
    if (f) {
      try {
        f >> doc;
        existing = true;
      } catch (const json::parse_error&) {
        throw InputError("existing report file is not valid JSON: " + out_path);
      }
    }
  }
  if (existing) {
    if (!doc.contains("scenario_hash") || doc["scenario_hash"] != hash)
      throw InputError(
          "refusing to merge runs across differing scenario hashes");
  } else {
    doc = json{{"schema_version", 1},
               {"tool", "srcurv"},
               {"version", kToolVersion},
               {"scenario_hash", hash},
               {"scenario", scenario_echo},
               {"runs", json::array()}};
  }
  doc["runs"].push_back(run);
  return doc;
}

dynamics::FlowOptions flow_options(const scenario::ScenarioSpec& sp,
                                   const CommandArgs& args) {
  dynamics::FlowOptions opts;
  opts.adaptive = !args.fixed_step;
  opts.dt = args.dt.value_or(sp.dt);
  opts.rtol = args.rtol.value_or(sp.rtol);
  opts.atol = sp.atol;
  opts.renormalize = true;
  return opts;
}

json run_validate(const scenario::BuiltScenario& bs, const CommandArgs& args,
                  int* exit_code) {
  json r;
  if (!bs.sr) {
    r["applicable"] = false;
    r["passed"] = true;
    r["note"] = "not a sub-Riemannian scenario; nothing to validate";
    return r;
  }
  std::uint64_t seed = args.seed.value_or(bs.spec.seed);
  auto pts = scenario::sample_total_points(bs, args.samples, seed);
  Vec c = Vec::Zero(bs.sr->s);
  if (!bs.spec.c.empty())
    c = Eigen::Map<const Vec>(bs.spec.c.data(), bs.spec.c.size());
  ValidationReport rep = validate(*bs.sr, pts, c);
  r["applicable"] = true;
  r["passed"] = rep.passed;
  r["residuals"]["distribution_invariance"] = rep.distribution_invariance;
  r["residuals"]["metric_invariance"] = rep.metric_invariance;
  r["residuals"]["commutators"] = rep.commutators;
  r["residuals"]["potential_invariance"] = rep.potential_invariance;
  r["bracket_generating"] = rep.bracket_generating;
  r["level_rule_ok"] = rep.level_rule_ok;
  if (!rep.failure.empty()) r["failure"] = rep.failure;
  r["samples"] = args.samples;
  if (!rep.passed) *exit_code = 1;
  return r;
}

json run_reduce(const scenario::BuiltScenario& bs, const CommandArgs& args) {
  json r;
  r["base_dim"] = bs.system.dim();
  r["symmetries"] = bs.system.magnetic.symmetries();
  r["c0"] = bs.system.c0;
  r["c"] = vec_to_json(bs.system.magnetic.trivial() ? Vec()
                                                    : bs.system.magnetic.levels());
  json probes = json::array();
  // probe points: region center and midpoints toward the corners
  std::vector<Vec> pts;
  Vec mid = 0.5 * (bs.region.lo + bs.region.hi);
  pts.push_back(mid);
  pts.push_back(0.5 * (mid + bs.region.lo));
  pts.push_back(0.5 * (mid + bs.region.hi));
  for (const Vec& q : pts) {
    if (!bs.system.base.in_domain(q)) continue;
    json p;
    p["q"] = vec_to_json(q);
    p["g"] = mat_to_json(bs.system.base.metric(q));
    p["W"] = bs.system.W(q);
    if (!bs.system.magnetic.trivial()) {
      p["J_combined"] = mat_to_json(bs.system.Jc(q));
      for (int i = 0; i < bs.system.magnetic.symmetries(); ++i)
        p["J"].push_back(mat_to_json(bs.system.magnetic.tensor(i, bs.system.base, q)));
    }
    probes.push_back(p);
  }
  r["probes"] = probes;
  (void)args;
  return r;
}

json run_criterion(const scenario::BuiltScenario& bs, const CommandArgs& args,
                   int* exit_code) {
  curvature::CriterionGrids grids;
  grids.q = args.grid_q.value_or(bs.spec.grid_q);
  grids.sphere = args.grid_sphere.value_or(bs.spec.grid_sphere);
  curvature::CriterionMode mode = curvature::mode_from_token(
      args.mode.empty() ? "theorem3" : args.mode);
  curvature::CriterionReport rep =
      mode == curvature::CriterionMode::kPointwise
          ? curvature::criterion_pointwise(bs.system, bs.region, grids)
          : curvature::criterion_global(bs.system, bs.region, mode, grids);
  if (rep.applicable && !rep.satisfied) *exit_code = 1;
  return criterion_to_json(rep);
}

json run_verify(const scenario::BuiltScenario& bs, const CommandArgs& args,
                int* exit_code) {
  std::uint64_t seed = args.seed.value_or(bs.spec.seed);
  auto states = scenario::sample_states(bs, args.samples, seed);
  grassmann::VerificationReport rep =
      grassmann::verify_curvature(bs.system, states, args.tol);
  json r;
  r["passed"] = rep.passed;
  r["max_relative_error"] = rep.max_error;
  r["tol"] = rep.tol;
  r["samples"] = (int)rep.points.size();
  r["oracle_failures"] = rep.failures;
  json pts = json::array();
  for (const auto& vp : rep.points) {
    json p;
    p["q"] = vec_to_json(vp.state.q);
    p["p"] = vec_to_json(vp.state.p);
    if (vp.failure.empty()) {
      p["closed_form"] = mat_to_json(vp.closed_form);
      p["oracle"] = mat_to_json(vp.oracle);
      p["error"] = vp.error;
    } else {
      p["failure"] = vp.failure;
    }
    pts.push_back(p);
  }
  r["points"] = pts;
  if (!rep.passed) *exit_code = 1;
  return r;
}

json run_flow(const scenario::BuiltScenario& bs, const CommandArgs& args,
              std::string* csv) {
  double T = args.t.value_or(10.0);
  dynamics::Trajectory tr =
      dynamics::flow(bs.system, bs.initial, T, flow_options(bs.spec, args));
  *csv = dynamics::trajectory_csv(tr);
  json r;
  r["t_end"] = tr.ts.back();
  r["steps"] = (int)tr.ts.size() - 1;
  r["max_relative_drift"] = tr.max_relative_drift();
  r["final"]["q"] = vec_to_json(tr.xs.back().head(bs.system.dim()));
  r["final"]["p"] = vec_to_json(tr.xs.back().tail(bs.system.dim()));
  r["final"]["H"] = tr.energy.back();
  return r;
}

json run_lyapunov(const scenario::BuiltScenario& bs, const CommandArgs& args,
                  std::string* csv) {
  double T = args.t.value_or(50.0);
  hyperbolic::LyapunovOptions opts;
  opts.renorm_dt = args.renorm_dt.value_or(0.5);
  opts.dt = args.dt.value_or(bs.spec.dt);
  hyperbolic::LyapunovReport rep = hyperbolic::lyapunov(bs.system, bs.initial, T, opts);
  *csv = hyperbolic::lyapunov_csv(rep);
  json r;
  r["T"] = rep.T;
  r["renorm_dt"] = rep.renorm_dt;
  r["exponents"] = vec_to_json(rep.exponents);
  r["spectrum_sum"] = rep.spectrum_sum;
  r["converged"] = rep.converged;
  return r;
}

json run_cone(const scenario::BuiltScenario& bs, const CommandArgs& args,
              int* exit_code) {
  double T = args.t.value_or(10.0);
  hyperbolic::ConeCertificate cert =
      hyperbolic::cone_certificate(bs.system, bs.initial, T);
  json r;
  r["passed"] = cert.passed;
  r["delta"] = cert.delta;
  r["interval"] = {cert.t_begin, cert.t_end};
  r["cone_invariant"] = cert.cone_invariant;
  r["min_growth_ratio"] = cert.min_growth_ratio;
  if (!cert.passed) {
    r["fail_time"] = cert.fail_time;
    r["failure"] = cert.failure;
    *exit_code = 1;
  }
  return r;
}

void write_gnuplot(const std::string& prefix, const std::string& csv) {
  // two-column files: t vs each remaining column
  std::istringstream in(csv);
  std::string header;
  if (!std::getline(in, header)) return;
  std::vector<std::string> cols;
  {
    std::istringstream hs(header);
    std::string c;
    while (std::getline(hs, c, ',')) cols.push_back(c);
  }
  std::vector<std::ostringstream> outs(cols.size());
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    for (std::size_t i = 1; i < cells.size() && i < cols.size(); ++i)
      outs[i] << cells[0] << ' ' << cells[i] << '\n';
  }
  for (std::size_t i = 1; i < cols.size(); ++i)
    write_file(prefix + "_" + cols[i] + ".dat", outs[i].str());
}

}  // namespace

CommandOutcome run_command(const CommandArgs& args) {
  CommandOutcome out;
  Timer timer;
  try {
    scenario::ScenarioSpec sp =
        args.scenario_text.empty()
            ? scenario::load_scenario_file(args.scenario_path)
            : scenario::load_scenario(args.scenario_text);
    std::string hash = scenario::scenario_hash(sp);
    json echo = json::parse(scenario::canonical_scenario(sp));

    scenario::BuiltScenario bs = scenario::build(sp);

    int exit_code = 0;
    json result;
    std::string csv;
    if (args.command == "validate") {
      result = run_validate(bs, args, &exit_code);
    } else if (args.command == "reduce") {
      result = run_reduce(bs, args);
    } else if (args.command == "criterion") {
      result = run_criterion(bs, args, &exit_code);
    } else if (args.command == "verify-theorem2") {
      result = run_verify(bs, args, &exit_code);
    } else if (args.command == "flow") {
      result = run_flow(bs, args, &csv);
    } else if (args.command == "lyapunov") {
      result = run_lyapunov(bs, args, &csv);
    } else if (args.command == "cone") {
      result = run_cone(bs, args, &exit_code);
    } else {
      throw InputError("unknown command '" + args.command + "'");
    }

    json run;
    run["command"] = args.command;
    if (!args.mode.empty()) run["mode"] = args.mode;
    run["seed"] = args.seed.value_or(sp.seed);
    run["wallclock_s"] = timer.seconds();
    run["result"] = result;

    json doc = merge_report(args.out_path, hash, echo, run);
    out.report_json = doc.dump(2);
    out.run_json = run.dump(2);
    out.csv = csv;
    out.exit_code = exit_code;

    if (!args.out_path.empty()) write_file(args.out_path, out.report_json);
    if (!args.csv_path.empty() && !csv.empty()) write_file(args.csv_path, csv);
    if (!args.gnuplot_prefix.empty() && !csv.empty())
      write_gnuplot(args.gnuplot_prefix, csv);
    return out;
  } catch (const InputError& e) {
    out.exit_code = 2;
    out.report_json = json{{"error", e.what()}, {"kind", "input"}}.dump(2);
    return out;
  } catch (const NumericError& e) {
    out.exit_code = 3;
    out.report_json = json{{"error", e.what()}, {"kind", "numeric"}}.dump(2);
    return out;
  } catch (const std::exception& e) {
    out.exit_code = 3;
    out.report_json = json{{"error", e.what()}, {"kind", "internal"}}.dump(2);
    return out;
  }
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"srcurv: curvature criteria and hyperbolicity diagnostics for "
               "reduced magnetic/potential flows"};
  app.require_subcommand(1);

  CommandArgs ca;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("scenario", ca.scenario_path, "scenario JSON file")
        ->required();
    cmd->add_option("--out", ca.out_path, "report file (merged by scenario hash)");
    cmd->add_option("--seed", ca.seed, "override scenario seed");
  };

  auto* validate = app.add_subcommand("validate", "check the symmetry assumptions");
  add_common(validate);
  validate->add_option("--samples", ca.samples, "sample points");

  auto* reduce = app.add_subcommand("reduce", "build and summarize the reduced system");
  add_common(reduce);

  auto* criterion = app.add_subcommand("criterion", "evaluate a hyperbolicity criterion");
  add_common(criterion);
  criterion->add_option("--mode", ca.mode,
                        "theorem3|theorem4|corollary1|corollary2")
      ->default_val("theorem3");
  criterion->add_option("--grid-q", ca.grid_q, "per-axis chart grid");
  criterion->add_option("--grid-sphere", ca.grid_sphere, "direction samples");

  auto* verify = app.add_subcommand(
      "verify-theorem2", "cross-validate the curvature form against the frame oracle");
  add_common(verify);
  verify->add_option("--samples", ca.samples, "number of on-shell samples");
  verify->add_option("--tol", ca.tol, "relative tolerance");

  auto* flowc = app.add_subcommand("flow", "integrate the reduced flow");
  add_common(flowc);
  flowc->add_option("--t", ca.t, "integration time");
  flowc->add_option("--dt", ca.dt, "step size");
  flowc->add_option("--rtol", ca.rtol, "adaptive relative tolerance");
  flowc->add_flag("--fixed", ca.fixed_step, "fixed-step integrator");
  flowc->add_option("--csv", ca.csv_path, "trajectory CSV path");
  flowc->add_option("--gnuplot", ca.gnuplot_prefix, "two-column file prefix");

  auto* lyap = app.add_subcommand("lyapunov", "measure the exponent spectrum");
  add_common(lyap);
  lyap->add_option("--t", ca.t, "run length");
  lyap->add_option("--dt", ca.dt, "integrator step");
  lyap->add_option("--renorm-dt", ca.renorm_dt, "reorthonormalization interval");
  lyap->add_option("--csv", ca.csv_path, "exponent time-series CSV path");
  lyap->add_option("--gnuplot", ca.gnuplot_prefix, "two-column file prefix");

  auto* cone = app.add_subcommand("cone", "scalar cone certificate (surfaces)");
  add_common(cone);
  cone->add_option("--t", ca.t, "run length");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (auto* cmd : {validate, reduce, criterion, verify, flowc, lyap, cone})
    if (cmd->parsed()) ca.command = cmd->get_name();

  CommandOutcome out = run_command(ca);
  if (ca.out_path.empty())
    std::cout << out.report_json << std::endl;
  else
    std::cerr << (out.exit_code == 0 ? "ok" : "check failed") << ": report -> "
              << ca.out_path << std::endl;
  return out.exit_code;
}

}  // namespace srcurv::cli
