#include "srcurv/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace srcurv::scenario {

using nlohmann::json;

namespace {

double parse_number(const json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw InputError("malformed numeric string for " + what + ": '" + s + "'");
    return v;
  }
  throw InputError("expected a number (as decimal string) for " + what);
}

std::vector<double> parse_vector(const json& j, const std::string& what) {
  if (!j.is_array()) throw InputError("expected an array for " + what);
  std::vector<double> out;
  for (const auto& e : j) out.push_back(parse_number(e, what));
  return out;
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

ScenarioSpec load_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("scenario JSON parse error: ") + e.what());
  }
  if (!j.is_object()) throw InputError("scenario must be a JSON object");

  ScenarioSpec sp;
  if (j.contains("schema_version"))
    sp.schema_version = (int)parse_number(j["schema_version"], "schema_version");
  if (sp.schema_version != 1)
    throw InputError("unsupported scenario schema_version");
  if (!j.contains("model") || !j["model"].is_string())
    throw InputError("scenario needs a 'model' string");
  sp.model = j["model"].get<std::string>();

  if (j.contains("params")) {
    for (auto& [k, v] : j["params"].items())
      sp.params[k] = parse_number(v, "params." + k);
  }
  if (j.contains("dim")) sp.dim = (int)parse_number(j["dim"], "dim");
  if (j.contains("phi")) sp.phi = j["phi"].get<std::string>();
  if (j.contains("b")) sp.b = j["b"].get<std::string>();
  if (j.contains("W")) sp.W = j["W"].get<std::string>();
  if (j.contains("periods")) sp.periods = parse_vector(j["periods"], "periods");
  if (j.contains("domain_positive"))
    sp.domain_positive = j["domain_positive"].get<std::string>();

  if (j.contains("levels")) {
    const auto& lv = j["levels"];
    if (lv.contains("c0")) sp.c0 = parse_number(lv["c0"], "levels.c0");
    if (lv.contains("c")) sp.c = parse_vector(lv["c"], "levels.c");
  }

  if (j.contains("n")) sp.n = (int)parse_number(j["n"], "n");
  if (j.contains("s")) sp.s = (int)parse_number(j["s"], "s");
  auto load_fields = [&](const char* key) {
    std::vector<std::vector<std::string>> out;
    if (!j.contains(key)) return out;
    for (const auto& row : j[key]) {
      std::vector<std::string> comps;
      for (const auto& e : row) comps.push_back(e.get<std::string>());
      out.push_back(comps);
    }
    return out;
  };
  sp.frame_exprs = load_fields("frame");
  sp.symmetry_exprs = load_fields("symmetries");
  if (j.contains("slice")) sp.slice = parse_vector(j["slice"], "slice");
  if (j.contains("derived_indices"))
    for (const auto& e : j["derived_indices"])
      sp.derived_indices.push_back((int)parse_number(e, "derived_indices"));

  if (j.contains("integrator")) {
    const auto& in = j["integrator"];
    if (in.contains("dt")) sp.dt = parse_number(in["dt"], "integrator.dt");
    if (in.contains("rtol")) sp.rtol = parse_number(in["rtol"], "integrator.rtol");
    if (in.contains("atol")) sp.atol = parse_number(in["atol"], "integrator.atol");
  }
  if (j.contains("region")) {
    const auto& r = j["region"];
    geometry::Region reg;
    auto lo = parse_vector(r["min"], "region.min");
    auto hi = parse_vector(r["max"], "region.max");
    if (lo.size() != hi.size()) throw InputError("region min/max size mismatch");
    reg.lo = Eigen::Map<Vec>(lo.data(), lo.size());
    reg.hi = Eigen::Map<Vec>(hi.data(), hi.size());
    sp.region = reg;
  }
  if (j.contains("grids")) {
    const auto& g = j["grids"];
    if (g.contains("q")) sp.grid_q = (int)parse_number(g["q"], "grids.q");
    if (g.contains("sphere"))
      sp.grid_sphere = (int)parse_number(g["sphere"], "grids.sphere");
  }
  if (j.contains("seed")) sp.seed = (std::uint64_t)parse_number(j["seed"], "seed");
  if (j.contains("initial")) {
    const auto& in = j["initial"];
    if (in.contains("q")) {
      auto v = parse_vector(in["q"], "initial.q");
      sp.initial_q = Eigen::Map<Vec>(v.data(), v.size());
    }
    if (in.contains("p")) {
      auto v = parse_vector(in["p"], "initial.p");
      sp.initial_p = Eigen::Map<Vec>(v.data(), v.size());
    }
  }
  return sp;
}

ScenarioSpec load_scenario_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return load_scenario(ss.str());
}

std::string canonical_scenario(const ScenarioSpec& sp) {
  json j;
  j["schema_version"] = sp.schema_version;
  j["model"] = sp.model;
  if (!sp.params.empty()) {
    json p;
    for (auto& [k, v] : sp.params) p[k] = format_number(v);
    j["params"] = p;
  }
  j["dim"] = sp.dim;
  if (!sp.phi.empty()) j["phi"] = sp.phi;
  if (!sp.b.empty()) j["b"] = sp.b;
  if (!sp.W.empty()) j["W"] = sp.W;
  if (!sp.periods.empty()) {
    json a = json::array();
    for (double v : sp.periods) a.push_back(format_number(v));
    j["periods"] = a;
  }
  if (!sp.domain_positive.empty()) j["domain_positive"] = sp.domain_positive;
  j["levels"]["c0"] = format_number(sp.c0);
  {
    json a = json::array();
    for (double v : sp.c) a.push_back(format_number(v));
    j["levels"]["c"] = a;
  }
  if (sp.n > 0) {
    j["n"] = sp.n;
    j["s"] = sp.s;
    j["frame"] = sp.frame_exprs;
    j["symmetries"] = sp.symmetry_exprs;
    json a = json::array();
    for (double v : sp.slice) a.push_back(format_number(v));
    j["slice"] = a;
    if (!sp.derived_indices.empty()) j["derived_indices"] = sp.derived_indices;
  }
  j["integrator"]["dt"] = format_number(sp.dt);
  j["integrator"]["rtol"] = format_number(sp.rtol);
  j["integrator"]["atol"] = format_number(sp.atol);
  if (sp.region) {
    json lo = json::array(), hi = json::array();
    for (int i = 0; i < sp.region->lo.size(); ++i) {
      lo.push_back(format_number(sp.region->lo[i]));
      hi.push_back(format_number(sp.region->hi[i]));
    }
    j["region"]["min"] = lo;
    j["region"]["max"] = hi;
  }
  j["grids"]["q"] = sp.grid_q;
  j["grids"]["sphere"] = sp.grid_sphere;
  j["seed"] = sp.seed;
  if (sp.initial_q) {
    json a = json::array();
    for (int i = 0; i < sp.initial_q->size(); ++i)
      a.push_back(format_number((*sp.initial_q)[i]));
    j["initial"]["q"] = a;
  }
  if (sp.initial_p) {
    json a = json::array();
    for (int i = 0; i < sp.initial_p->size(); ++i)
      a.push_back(format_number((*sp.initial_p)[i]));
    j["initial"]["p"] = a;
  }
  return j.dump();
}

std::string scenario_hash(const ScenarioSpec& sp) {
  // FNV-1a 64-bit over the canonical serialization.
  std::string text = canonical_scenario(sp);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names = {
      "flat_torus",  "hyperbolic_plane",     "sphere",   "custom_conformal",
      "heisenberg",  "surface_times_circle", "custom_sr"};
  return names;
}

namespace {

FieldPtr make_expr_field(const std::string& text, int dim,
                         const std::map<std::string, double>& params,
                         double fallback) {
  if (text.empty()) return constant_field(fallback, dim);
  return expr_field(text, dim, params);
}

geometry::Region default_region(const std::string& model, int dim) {
  geometry::Region r;
  r.lo = Vec::Constant(dim, -1.0);
  r.hi = Vec::Constant(dim, 1.0);
  if (model == "flat_torus") {
    r.lo = Vec::Zero(dim);
    r.hi = Vec::Constant(dim, 2.0 * M_PI);
  } else if (model == "hyperbolic_plane" || model == "surface_times_circle") {
    r.lo = Vec(2);
    r.hi = Vec(2);
    r.lo << -1.0, 0.5;
    r.hi << 1.0, 2.0;
  } else if (model == "sphere") {
    r.lo = Vec::Constant(2, -1.2);
    r.hi = Vec::Constant(2, 1.2);
  }
  return r;
}

Vec default_initial_q(const std::string& model, int dim,
                      const geometry::Region& region) {
  if (model == "hyperbolic_plane" || model == "surface_times_circle") {
    Vec q(2);
    q << 0.0, 1.0;
    return q;
  }
  if (model == "sphere") {
    Vec q(2);
    q << 1.0, 0.0;
    return q;
  }
  if (model == "flat_torus") return Vec::Constant(dim, 0.5);
  return 0.5 * (region.lo + region.hi);
}

Vec default_initial_dir(const std::string& model, int dim) {
  if (model == "sphere") {
    Vec u(2);
    u << 0.0, 1.0;  // tangent to the equator circle at (1, 0)
    return u;
  }
  return Vec::Unit(dim, 0);
}

ReducedSystem build_conformal(const ScenarioSpec& sp, const std::string& name) {
  int dim = sp.dim;
  std::string phi = sp.phi;
  if (sp.model == "flat_torus") {
    phi = "";
    dim = 2;
  } else if (sp.model == "hyperbolic_plane") {
    phi = "-log(q2)";
    dim = 2;
  } else if (sp.model == "sphere") {
    phi = "log(2) - log(1 + q1^2 + q2^2)";
    dim = 2;
  }
  FieldPtr phi_field = make_expr_field(phi, dim, sp.params, 0.0);
  geometry::ChartedMetric base = geometry::ChartedMetric::conformal(dim, phi_field);
  if (sp.model == "flat_torus")
    base.periods = Vec::Constant(2, 2.0 * M_PI);
  else if (!sp.periods.empty())
    base.periods = Eigen::Map<const Vec>(sp.periods.data(), sp.periods.size());
  if (sp.model == "hyperbolic_plane") {
    base.domain = [](const Vec& q) { return q[1] > 1e-9; };
  } else if (!sp.domain_positive.empty()) {
    auto guard = expr_field(sp.domain_positive, dim, sp.params);
    base.domain = [guard](const Vec& q) { return guard->value(q) > 0.0; };
  }

  ReducedSystem sys;
  sys.base = std::move(base);
  sys.potential = make_expr_field(sp.W, dim, sp.params, 0.0);
  if (!sp.b.empty()) {
    if (dim != 2)
      throw InputError("scalar magnetic intensity requires dim = 2");
    double level = sp.c.empty() ? 1.0 : sp.c[0];
    sys.magnetic = geometry::MagneticTensor::surface(
        sys.base, make_expr_field(sp.b, dim, sp.params, 0.0), level);
  }
  sys.c0 = sp.c0;
  sys.name = name;
  return sys;
}

SRStructure build_heisenberg(const ScenarioSpec& sp) {
  SRStructure S;
  S.n = 3;
  S.s = 1;
  S.frame = {[](const Vec& q) {
               Vec v(3);
               v << 1.0, 0.0, -0.5 * q[1];
               return v;
             },
             [](const Vec& q) {
               Vec v(3);
               v << 0.0, 1.0, 0.5 * q[0];
               return v;
             }};
  S.symmetries = {[](const Vec&) {
    Vec v(3);
    v << 0.0, 0.0, 1.0;
    return v;
  }};
  S.potential = make_expr_field(sp.W, 3, sp.params, 0.0);
  S.slice_z = Vec::Zero(1);
  S.name = "heisenberg";
  return S;
}

SRStructure build_surface_times_circle(const ScenarioSpec& sp) {
  SRStructure S;
  S.n = 3;
  S.s = 1;
  S.frame = {[](const Vec& q) {
               Vec v(3);
               v << q[1], 0.0, -1.0;
               return v;
             },
             [](const Vec& q) {
               Vec v(3);
               v << 0.0, q[1], 0.0;
               return v;
             }};
  S.symmetries = {[](const Vec&) {
    Vec v(3);
    v << 0.0, 0.0, 1.0;
    return v;
  }};
  S.potential = make_expr_field(sp.W, 3, sp.params, 0.0);
  S.slice_z = Vec::Zero(1);
  S.name = "surface_times_circle";
  return S;
}

SRStructure build_custom_sr(const ScenarioSpec& sp) {
  if (sp.n <= 0 || sp.s < 0 || sp.s >= sp.n)
    throw InputError("custom_sr needs n > 0 and 0 <= s < n");
  if ((int)sp.frame_exprs.size() != sp.n - sp.s)
    throw InputError("custom_sr needs n−s frame fields");
  if ((int)sp.symmetry_exprs.size() != sp.s)
    throw InputError("custom_sr needs s symmetry fields");
  SRStructure S;
  S.n = sp.n;
  S.s = sp.s;
  auto make_field = [&](const std::vector<std::string>& comps) {
    if ((int)comps.size() != sp.n)
      throw InputError("vector field needs n components");
    std::vector<exprfield::Expr> exprs;
    for (const auto& c : comps) exprs.push_back(exprfield::parse(c, sp.n, sp.params));
    auto params = sp.params;
    return VectorField([exprs, params](const Vec& q) {
      Vec v(exprs.size());
      for (std::size_t i = 0; i < exprs.size(); ++i) v[i] = exprs[i].eval(q, params);
      return v;
    });
  };
  for (const auto& f : sp.frame_exprs) S.frame.push_back(make_field(f));
  for (const auto& f : sp.symmetry_exprs) S.symmetries.push_back(make_field(f));
  S.potential = make_expr_field(sp.W, sp.n, sp.params, 0.0);
  S.slice_z = Vec::Zero(sp.s);
  if (!sp.slice.empty()) {
    if ((int)sp.slice.size() != sp.s)
      throw InputError("slice needs one value per symmetry");
    S.slice_z = Eigen::Map<const Vec>(sp.slice.data(), sp.slice.size());
  }
  S.derived_indices = sp.derived_indices;
  S.name = "custom_sr";
  return S;
}

}  // namespace

BuiltScenario build(const ScenarioSpec& sp) {
  BuiltScenario bs;
  bs.spec = sp;

  const bool is_sr = sp.model == "heisenberg" ||
                     sp.model == "surface_times_circle" ||
                     sp.model == "custom_sr";
  if (is_sr) {
    if (sp.model == "heisenberg")
      bs.sr = build_heisenberg(sp);
    else if (sp.model == "surface_times_circle")
      bs.sr = build_surface_times_circle(sp);
    else
      bs.sr = build_custom_sr(sp);
    Vec c = Vec::Zero(bs.sr->s);
    if (!sp.c.empty()) {
      if ((int)sp.c.size() != bs.sr->s)
        throw InputError("levels.c needs one entry per symmetry");
      c = Eigen::Map<const Vec>(sp.c.data(), sp.c.size());
    }
    bs.system = reduce(*bs.sr, sp.c0, c);
    bs.system.name = sp.model;
    if (sp.model == "surface_times_circle")
      bs.system.base.domain = [](const Vec& q) { return q[1] > 1e-9; };
  } else if (sp.model == "flat_torus" || sp.model == "hyperbolic_plane" ||
             sp.model == "sphere" || sp.model == "custom_conformal") {
    bs.system = build_conformal(sp, sp.model);
  } else {
    throw InputError("unknown model '" + sp.model + "'");
  }

  bs.region = sp.region ? *sp.region
                        : default_region(sp.model, bs.system.dim());
  if (bs.region.lo.size() != bs.system.dim())
    throw InputError("region dimension does not match the reduced chart");

  Vec q = sp.initial_q ? *sp.initial_q
                       : default_initial_q(sp.model, bs.system.dim(), bs.region);
  Vec dir;
  if (sp.initial_p) {
    dir = *sp.initial_p;
  } else {
    Vec u = default_initial_dir(sp.model, bs.system.dim());
    dir = bs.system.base.metric(q) * u;  // covector of the unit direction
  }
  dynamics::CotangentState raw{q, dir};
  bs.initial = dynamics::rescale_to_shell(bs.system, raw);
  return bs;
}

std::vector<dynamics::CotangentState> sample_states(const BuiltScenario& bs,
                                                    int count,
                                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss;
  const int d = bs.system.dim();
  std::vector<dynamics::CotangentState> out;
  int guard = 0;
  while ((int)out.size() < count && ++guard < 100 * count + 100) {
    Vec q(d);
    for (int i = 0; i < d; ++i)
      q[i] = bs.region.lo[i] + uni(rng) * (bs.region.hi[i] - bs.region.lo[i]);
    if (!bs.system.base.in_domain(q)) continue;
    double gap = bs.system.c0 + bs.system.W(q);
    if (gap <= 0.0) continue;
    Vec u(d);
    for (int i = 0; i < d; ++i) u[i] = gauss(rng);
    if (u.norm() < 1e-12) continue;
    Mat g = bs.system.base.metric(q);
    Vec w = u / std::sqrt(u.dot(g * u));
    Vec ph = std::sqrt(2.0 * gap) * w;
    out.push_back({q, Vec(g * ph)});
  }
  if ((int)out.size() < count)
    throw NumericError("failed to sample admissible on-shell states");
  return out;
}

std::vector<Vec> sample_total_points(const BuiltScenario& bs, int count,
                                     std::uint64_t seed) {
  if (!bs.sr) throw InputError("total-space samples exist only for SR models");
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const int m = bs.sr->base_dim();
  std::vector<Vec> out;
  int guard = 0;
  while ((int)out.size() < count && ++guard < 100 * count + 100) {
    Vec q(bs.sr->n);
    for (int i = 0; i < m; ++i)
      q[i] = bs.region.lo[i] + uni(rng) * (bs.region.hi[i] - bs.region.lo[i]);
    for (int i = 0; i < bs.sr->s; ++i)
      q[m + i] = bs.sr->slice_z[i] + 0.6 * (uni(rng) - 0.5);
    if (bs.system.base.in_domain(q.head(m))) out.push_back(q);
  }
  if ((int)out.size() < count)
    throw NumericError("failed to sample total-space points");
  return out;
}

}  // namespace srcurv::scenario
