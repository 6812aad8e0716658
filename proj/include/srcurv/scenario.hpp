#pragma once

// Scenario files and the built-in model registry.  A scenario is a JSON
// document (numerics as decimal strings, see docs/scenario_schema.md)
// selecting a model, expressions, levels, integrator settings and grids.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "srcurv/dynamics.hpp"
#include "srcurv/reduced_system.hpp"
#include "srcurv/subriemannian.hpp"

namespace srcurv::scenario {

struct ScenarioSpec {
  int schema_version = 1;
  std::string model;
  std::map<std::string, double> params;

  // Riemannian/conformal models.
  int dim = 2;
  std::string phi, b, W;  // expression strings; empty = absent
  std::vector<double> periods;
  std::string domain_positive;  // chart guard: expression required > 0

  // Levels.
  double c0 = 0.5;
  std::vector<double> c;

  // custom_sr.
  int n = 0, s = 0;
  std::vector<std::vector<std::string>> frame_exprs;
  std::vector<std::vector<std::string>> symmetry_exprs;
  std::vector<double> slice;
  std::vector<int> derived_indices;

  // Numerics.
  double dt = 1e-3, rtol = 1e-9, atol = 1e-12;
  std::optional<geometry::Region> region;
  int grid_q = 9, grid_sphere = 24;
  std::uint64_t seed = 1;
  std::optional<Vec> initial_q, initial_p;
};

ScenarioSpec load_scenario(const std::string& json_text);
ScenarioSpec load_scenario_file(const std::string& path);

/// Canonical serialization (sorted keys, numerics as strings); input for
/// the scenario content hash.
std::string canonical_scenario(const ScenarioSpec& spec);
std::string scenario_hash(const ScenarioSpec& spec);

struct BuiltScenario {
  ScenarioSpec spec;
  std::optional<SRStructure> sr;  // present for sub-Riemannian models
  ReducedSystem system;
  geometry::Region region;
  dynamics::CotangentState initial;  // on-shell
};

/// Construct the model: direct models are built as reduced systems,
/// sub-Riemannian models are validated and reduced.
BuiltScenario build(const ScenarioSpec& spec);

/// Seeded on-shell sample states in the region (uniform chart point,
/// uniform direction, momentum scaled to the energy shell).
std::vector<dynamics::CotangentState> sample_states(const BuiltScenario& bs,
                                                    int count,
                                                    std::uint64_t seed);

/// Sample points on the total chart of an SR model (region × a slab
/// around the slice in the orbit coordinates).
std::vector<Vec> sample_total_points(const BuiltScenario& bs, int count,
                                     std::uint64_t seed);

const std::vector<std::string>& model_names();

}  // namespace srcurv::scenario
