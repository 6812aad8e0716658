#include "srcurv/curvature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "srcurv/conventions.hpp"

namespace srcurv::curvature {

namespace {

struct PointData {
  Mat g, ginv;
  Vec ph;
  double gap = 0.0;  // c0 + W
};

PointData point_data(const ReducedSystem& sys,
                     const dynamics::CotangentState& s) {
  PointData pd;
  pd.g = sys.base.metric(s.q);
  pd.ginv = sys.base.metric_inv(s.q);
  pd.ph = pd.ginv * s.p;
  pd.gap = sys.energy_gap(s.q);
  return pd;
}

void check_preconditions(const ReducedSystem& sys,
                         const dynamics::CotangentState& s, const Vec& v,
                         const PointData& pd) {
  double pnorm2 = pd.ph.dot(pd.g * pd.ph);
  if (std::abs(pnorm2 - 2.0 * pd.gap) > 1e-8 * std::max(1.0, 2.0 * pd.gap))
    throw InputError("state off the energy shell: ‖p^h‖² must equal 2(c0+W)");
  double ortho = pd.ph.dot(pd.g * v);
  double scale = std::sqrt(std::max(pnorm2 * v.dot(pd.g * v), 1e-300));
  if (std::abs(ortho) > 1e-10 * std::max(1.0, scale))
    throw InputError("direction v must be g-orthogonal to p^h");
}

}  // namespace

double curvature_form(const ReducedSystem& sys,
                      const dynamics::CotangentState& s, const Vec& v,
                      TermBreakdown* breakdown) {
  PointData pd = point_data(sys, s);
  check_preconditions(sys, s, v, pd);

  TermBreakdown t;
  geometry::CurvatureTensor R = geometry::riemann(sys.base, s.q);
  t.riemann = geometry::curvature_quad(sys.base, R, s.q, pd.ph, v, pd.ph, v);

  geometry::GradHess gh = geometry::grad_hess(sys.base, *sys.potential, s.q);
  t.hess_w = v.dot(gh.hess * v);
  double gvw = v.dot(pd.g * gh.grad);
  t.grad_w = 1.5 / pd.gap * gvw * gvw;

  if (!sys.magnetic.trivial()) {
    Mat Jc = sys.Jc(s.q);
    Vec Jv = Jc * v;
    Vec Jp = Jc * pd.ph;
    // ∇J^c(p^h, v) with the frozen slot order: (∇_v J^c)(p^h).
    Vec nj = conventions::kNablaJDifferentiatesSecondSlot
                 ? geometry::nabla_J(sys.base, sys.magnetic, s.q, v, pd.ph)
                 : geometry::nabla_J(sys.base, sys.magnetic, s.q, pd.ph, v);
    t.nabla_j = v.dot(pd.g * nj);
    t.j_squared = 0.25 * Jv.dot(pd.g * Jv);
    double gJpv = v.dot(pd.g * Jp);
    t.jp_squared = 3.0 / (8.0 * pd.gap) * gJpv * gJpv;
    t.cross = 1.5 / pd.gap * gvw * gJpv;
  }
  if (breakdown) *breakdown = t;
  return t.total();
}

Mat curvature_matrix(const ReducedSystem& sys,
                     const dynamics::CotangentState& s,
                     const std::optional<Mat>& basis) {
  Mat V;
  if (basis) {
    V = *basis;
  } else {
    Mat ginv = sys.base.metric_inv(s.q);
    V = geometry::orthonormal_complement(sys.base, s.q, ginv * s.p);
  }
  const int m = V.cols();
  Mat r(m, m);
  std::vector<double> diag(m);
  for (int i = 0; i < m; ++i) {
    diag[i] = curvature_form(sys, s, V.col(i));
    r(i, i) = diag[i];
  }
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      double rij =
          0.5 * (curvature_form(sys, s, V.col(i) + V.col(j)) - diag[i] - diag[j]);
      r(i, j) = rij;
      r(j, i) = rij;
    }
  return r;
}

std::string mode_token(CriterionMode mode) {
  switch (mode) {
    case CriterionMode::kPointwise: return "theorem3";
    case CriterionMode::kGlobalBound: return "theorem4";
    case CriterionMode::kPurePotential: return "corollary1";
    case CriterionMode::kPureMagnetic: return "corollary2";
  }
  return "?";
}

CriterionMode mode_from_token(const std::string& token) {
  if (token == "theorem3") return CriterionMode::kPointwise;
  if (token == "theorem4") return CriterionMode::kGlobalBound;
  if (token == "corollary1") return CriterionMode::kPurePotential;
  if (token == "corollary2") return CriterionMode::kPureMagnetic;
  throw InputError("unknown criterion mode '" + token +
                   "' (use theorem3|theorem4|corollary1|corollary2)");
}

namespace {

// Direction samples on the unit sphere of R^d: uniform angles for d = 2,
// Fibonacci sphere for d = 3, random-orthonormalized otherwise.
std::vector<Vec> sphere_samples(int d, int n) {
  std::vector<Vec> out;
  if (d == 1) {
    out.push_back(Vec::Constant(1, 1.0));
    return out;
  }
  if (d == 2) {
    for (int k = 0; k < n; ++k) {
      double th = M_PI * k / n;  // antipodal directions are equivalent
      Vec u(2);
      u << std::cos(th), std::sin(th);
      out.push_back(u);
    }
    return out;
  }
  if (d == 3) {
    const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
    for (int k = 0; k < n; ++k) {
      double z = 1.0 - 2.0 * (k + 0.5) / n;
      double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      double th = 2.0 * M_PI * k / golden;
      Vec u(3);
      u << r * std::cos(th), r * std::sin(th), z;
      out.push_back(u);
    }
    return out;
  }
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> gauss;
  for (int k = 0; k < n; ++k) {
    Vec u(d);
    for (int i = 0; i < d; ++i) u[i] = gauss(rng);
    out.push_back(u.normalized());
  }
  return out;
}

struct GridWalker {
  const geometry::Region& region;
  int n;
  int d;
  std::vector<int> idx;
  bool done = false;
  explicit GridWalker(const geometry::Region& r, int grid)
      : region(r), n(grid), d(r.lo.size()), idx(r.lo.size(), 0) {}
  Vec point() const {
    Vec q(d);
    for (int i = 0; i < d; ++i) {
      double t = n == 1 ? 0.5 : (double)idx[i] / (n - 1);
      q[i] = region.lo[i] + t * (region.hi[i] - region.lo[i]);
    }
    return q;
  }
  void advance() {
    int i = 0;
    while (i < d && ++idx[i] == n) idx[i++] = 0;
    if (i == d) done = true;
  }
};

/// Map a Euclidean unit vector to a g-unit vector via the inverse
/// transpose Cholesky factor of g.
Mat gframe(const geometry::ChartedMetric& M, const Vec& q) {
  return geometry::orthonormal_frame(M, q);
}

// Shared maximization driver: coarse grid over (q, directions), then
// local ascent at the incumbent.
template <typename Eval>
void maximize(const ReducedSystem& sys, const geometry::Region& region,
              const CriterionGrids& grids, int ndirs, Eval eval,
              CriterionReport& rep) {
  const int d = sys.dim();
  rep.sup_value = -std::numeric_limits<double>::infinity();
  rep.grid_q = grids.q;
  rep.grid_sphere = grids.sphere;
  std::vector<Vec> dirs = sphere_samples(d, grids.sphere);

  auto eval_at = [&](const Vec& q, const Vec& u1, const Vec& u2) {
    Mat F = gframe(sys.base, q);
    Mat g = sys.base.metric(q);
    Vec w = F * u1;
    w /= std::sqrt(w.dot(g * w));
    Vec v;
    if (d == 2) {
      Mat comp = geometry::orthonormal_complement(sys.base, q, w);
      v = comp.col(0) * (u2[0] >= 0 ? 1.0 : -1.0);
    } else {
      // project u2's frame image off w, g-normalize
      Vec cand = F * u2;
      cand -= w.dot(g * cand) * w;
      double n2 = cand.dot(g * cand);
      if (n2 < 1e-12) return -std::numeric_limits<double>::infinity();
      v = cand / std::sqrt(n2);
    }
    return eval(q, w, v);
  };

  std::vector<Vec> dirs2 =
      d == 2 ? std::vector<Vec>{Vec::Constant(1, 1.0)} : dirs;

  Vec best_q, best_u1, best_u2;
  for (GridWalker gw(region, grids.q); !gw.done; gw.advance()) {
    Vec q = gw.point();
    if (!sys.base.in_domain(q)) continue;
    for (const Vec& u1 : dirs)
      for (const Vec& u2 : dirs2) {
        double val = eval_at(q, u1, u2);
        if (val > rep.sup_value) {
          rep.sup_value = val;
          best_q = q;
          best_u1 = u1;
          best_u2 = u2;
        }
      }
  }
  if (!std::isfinite(rep.sup_value))
    throw NumericError("criterion grid produced no admissible samples");

  // Local ascent over (q, u1, u2).
  double qstep = 0.0;
  for (int i = 0; i < d; ++i)
    qstep = std::max(qstep,
                     (region.hi[i] - region.lo[i]) / std::max(1, grids.q - 1));
  double astep = M_PI / std::max(4, grids.sphere);
  for (int it = 0; it < grids.refine_steps; ++it) {
    bool improved = false;
    for (int i = 0; i < d; ++i)
      for (double sgn : {-1.0, 1.0}) {
        Vec qt = best_q;
        qt[i] = std::clamp(qt[i] + sgn * qstep, region.lo[i], region.hi[i]);
        if (!sys.base.in_domain(qt)) continue;
        double val = eval_at(qt, best_u1, best_u2);
        if (val > rep.sup_value) {
          rep.sup_value = val;
          best_q = qt;
          improved = true;
        }
      }
    for (Vec* dir : {&best_u1, &best_u2}) {
      if (dir->size() < 2) continue;
      for (int i = 0; i < dir->size(); ++i)
        for (double sgn : {-1.0, 1.0}) {
          Vec ut = *dir;
          ut[i] += sgn * astep;
          ut.normalize();
          double val = dir == &best_u1 ? eval_at(best_q, ut, best_u2)
                                       : eval_at(best_q, best_u1, ut);
          if (val > rep.sup_value) {
            rep.sup_value = val;
            *dir = ut;
            improved = true;
          }
        }
    }
    if (!improved) {
      qstep *= 0.5;
      astep *= 0.5;
    }
  }

  // Record argmax data in chart terms.
  Mat g = sys.base.metric(best_q);
  Mat F = gframe(sys.base, best_q);
  Vec w = F * best_u1;
  w /= std::sqrt(w.dot(g * w));
  rep.argmax_q = best_q;
  rep.argmax_w = w;
  if (d == 2) {
    rep.argmax_v = geometry::orthonormal_complement(sys.base, best_q, w).col(0);
  } else {
    Vec cand = F * best_u2;
    cand -= w.dot(g * cand) * w;
    rep.argmax_v = cand / std::sqrt(cand.dot(g * cand));
  }
}

}  // namespace

CriterionReport criterion_pointwise(const ReducedSystem& sys,
                                    const geometry::Region& region,
                                    const CriterionGrids& grids) {
  CriterionReport rep;
  rep.mode = CriterionMode::kPointwise;
  if (sys.dim() < 2) {
    rep.applicable = false;
    return rep;
  }
  auto eval = [&](const Vec& q, const Vec& w, const Vec&) {
    double gap = sys.energy_gap(q);
    Vec ph = std::sqrt(2.0 * gap) * w;
    dynamics::CotangentState s{q, sys.base.metric(q) * ph};
    Mat r = curvature_matrix(sys, s);
    Eigen::SelfAdjointEigenSolver<Mat> es(r);
    return es.eigenvalues().maxCoeff();
  };
  maximize(sys, region, grids, grids.sphere, eval, rep);
  rep.margin = -rep.sup_value;
  rep.satisfied = rep.sup_value < 0.0;
  return rep;
}

CriterionReport criterion_global(const ReducedSystem& sys,
                                 const geometry::Region& region,
                                 CriterionMode mode,
                                 const CriterionGrids& grids) {
  CriterionReport rep;
  rep.mode = mode;
  if (sys.dim() < 2) {
    rep.applicable = false;
    return rep;
  }
  geometry::KmaxReport km = geometry::k_max(sys.base, region, grids.q);
  rep.k_max = km.k_max;

  auto terms_at = [&](const Vec& q, const Vec& w, const Vec& v,
                      CriterionMode m) {
    Mat g = sys.base.metric(q);
    double gap = sys.energy_gap(q);
    geometry::GradHess gh = geometry::grad_hess(sys.base, *sys.potential, q);
    double val = 0.0;
    if (m != CriterionMode::kPureMagnetic) {
      double gradn = std::sqrt(gh.grad.dot(g * gh.grad));
      Eigen::SelfAdjointEigenSolver<Mat> es;
      // operator norm of Hess w.r.t. g: eigenvalues of g⁻¹ Hess
      Mat ginv = sys.base.metric_inv(q);
      Mat hop = ginv * gh.hess;
      Eigen::EigenSolver<Mat> ges(hop);
      double hnorm = ges.eigenvalues().cwiseAbs().maxCoeff();
      val += 3.0 * std::pow(gradn / (2.0 * gap), 2) + hnorm / (2.0 * gap);
    }
    if (m != CriterionMode::kPurePotential && !sys.magnetic.trivial()) {
      Mat Jc = sys.Jc(q);
      Vec Jv = Jc * v;
      Vec nj = conventions::kNablaJDifferentiatesSecondSlot
                   ? geometry::nabla_J(sys.base, sys.magnetic, q, v, w)
                   : geometry::nabla_J(sys.base, sys.magnetic, q, w, v);
      double nabla_term = v.dot(g * nj);
      if (m == CriterionMode::kPureMagnetic) {
        // printed pure-magnetic variant: c g(v, ∇J(w;v)) + c² g(Jv, Jv)
        val += nabla_term + Jv.dot(g * Jv);
      } else {
        double gwJv = w.dot(g * Jv);
        double gvw = v.dot(g * gh.grad);
        double gJwv = v.dot(g * (Jc * w));
        val += nabla_term + 0.25 * Jv.dot(g * Jv) +
               3.0 / (8.0 * gap) * gwJv * gwJv + 1.5 / gap * gvw * gJwv;
      }
    }
    return val;
  };

  auto eval = [&](const Vec& q, const Vec& w, const Vec& v) {
    return terms_at(q, w, v, mode);
  };
  maximize(sys, region, grids, grids.sphere, eval, rep);

  if (mode == CriterionMode::kPureMagnetic)
    rep.magnetic_bound_terms =
        terms_at(rep.argmax_q, rep.argmax_w, rep.argmax_v,
                 CriterionMode::kGlobalBound);

  rep.margin = -rep.k_max - rep.sup_value;
  rep.satisfied = rep.sup_value < -rep.k_max;
  rep.lhs_positive = rep.sup_value > 0.0;
  rep.unsatisfiable = rep.lhs_positive && rep.k_max >= 0.0;
  return rep;
}

}  // namespace srcurv::curvature
