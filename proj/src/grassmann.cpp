#include "srcurv/grassmann.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "srcurv/conventions.hpp"

namespace srcurv::grassmann {

namespace {

/// Rotation by +π/2 in the oriented g-orthonormal frame of a surface.
Vec surface_rot(const geometry::ChartedMetric& M, const Vec& q, const Vec& u) {
  Mat g = M.metric(q);
  Mat ginv = M.metric_inv(q);
  double s = std::sqrt(g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0));
  Mat rot(2, 2);
  rot << ginv(0, 1) * s, -ginv(0, 0) * s, ginv(1, 1) * s, -ginv(1, 0) * s;
  return rot * u;
}

/// Smooth g-orthonormal basis of {v : g(p^h, v) = 0} along a curve:
/// surfaces use the canonical rotation of p̂^h, higher dimensions project
/// a reference basis off p^h and re-orthonormalize.
struct FiberBasisBuilder {
  const ReducedSystem& sys;
  Mat reference;  // d × m, used for d ≥ 3
  Mat rotation;   // m × m orthogonal gauge at t = 0

  Mat at(const Vec& q, const Vec& p) const {
    const int d = sys.dim();
    const int m = d - 1;
    Mat g = sys.base.metric(q);
    Vec ph = sys.base.metric_inv(q) * p;
    Vec phat = ph / std::sqrt(ph.dot(g * ph));
    Mat out(d, m);
    if (d == 2) {
      out.col(0) = surface_rot(sys.base, q, phat);
      return out * rotation;
    }
    Mat cand = reference;
    // project off p̂^h, then Gram-Schmidt in g
    std::vector<Vec> basis;
    for (int c = 0; c < cand.cols(); ++c) {
      Vec v = cand.col(c);
      v -= phat.dot(g * v) * phat;
      for (const Vec& e : basis) v -= e.dot(g * v) * e;
      double n2 = v.dot(g * v);
      if (n2 < 1e-14)
        throw NumericError("fiber basis degenerated along the trajectory");
      basis.push_back(v / std::sqrt(n2));
    }
    for (int c = 0; c < m; ++c) out.col(c) = basis[c];
    return out;
  }
};

struct Series {
  std::vector<Mat> v;  // full grid
  int lo = 0, hi = -1;  // valid inclusive range
};

Series fd_derivative(const Series& f, double dt) {
  Series out;
  out.v.resize(f.v.size());
  out.lo = f.lo + 4;
  out.hi = f.hi - 4;
  if (out.lo > out.hi) throw NumericError("grid too coarse for differentiation");
  for (int k = out.lo; k <= out.hi; ++k) {
    Mat d1 = (-f.v[k + 2] + 8.0 * f.v[k + 1] - 8.0 * f.v[k - 1] + f.v[k - 2]) /
             (12.0 * dt);
    Mat d2 = (-f.v[k + 4] + 8.0 * f.v[k + 2] - 8.0 * f.v[k - 2] + f.v[k - 4]) /
             (24.0 * dt);
    out.v[k] = (16.0 * d1 - d2) / 15.0;
  }
  return out;
}

}  // namespace

JacobiCurveSamples jacobi_curve(const ReducedSystem& sys,
                                const dynamics::CotangentState& s,
                                double t_half, const JacobiCurveOptions& opts) {
  const int d = sys.dim();
  const int m = d - 1;
  if (m < 1) throw InputError("jacobi curve needs base dimension at least 2");

  JacobiCurveSamples js;
  js.m = m;
  js.basis = dynamics::reduced_tangent_basis(sys, s);
  js.dt = opts.dt;

  dynamics::TransportRun run =
      dynamics::inverse_transport(sys, s, -t_half, t_half, opts.dt);
  js.ts = run.ts;
  js.index_of_zero = run.index_of_zero;

  FiberBasisBuilder fb{sys, Mat(), Mat::Identity(m, m)};
  if (opts.initial_rotation) fb.rotation = *opts.initial_rotation;
  if (d >= 3) {
    Mat ginv0 = sys.base.metric_inv(s.q);
    fb.reference =
        geometry::orthonormal_complement(sys.base, s.q, ginv0 * s.p) *
        fb.rotation;
    fb.rotation = Mat::Identity(m, m);
  }

  const int n = run.ts.size();
  js.Z.resize(n);
  js.lagrangian_residual = 0.0;
  for (int k = 0; k < n; ++k) {
    Vec q = run.xs[k].head(d);
    Vec p = run.xs[k].tail(d);
    Mat fib = fb.at(q, p);
    Mat Zk(2 * m, m);
    for (int c = 0; c < m; ++c) {
      Vec vert = dynamics::vertical_lift(sys, q, fib.col(c));
      Vec back = run.psi[k] * vert;
      Zk.col(c) = js.basis.project(back);
    }
    js.Z[k] = Zk;
    // Lagrangian residual on unit columns.
    Mat Zn = Zk;
    for (int c = 0; c < m; ++c) {
      double nc = Zn.col(c).norm();
      if (nc > 0) Zn.col(c) /= nc;
    }
    Mat res = Zn.transpose() * js.basis.S * Zn;
    js.lagrangian_residual =
        std::max(js.lagrangian_residual, res.cwiseAbs().maxCoeff());
  }

  // Ż with margins.
  Series zs;
  zs.v = js.Z;
  zs.lo = 0;
  zs.hi = n - 1;
  Series zd = fd_derivative(zs, js.dt);
  js.Zdot.assign(n, Mat());
  for (int k = zd.lo; k <= zd.hi; ++k) js.Zdot[k] = zd.v[k];
  return js;
}

Mat velocity_form(const JacobiCurveSamples& samples, int k,
                  double* skew_residual) {
  if (samples.Zdot[k].size() == 0)
    throw InputError("velocity form requested outside differentiable interior");
  Mat G = samples.Z[k].transpose() * samples.basis.S * samples.Zdot[k];
  Mat sym = 0.5 * (G + G.transpose());
  if (skew_residual) {
    Mat skew = 0.5 * (G - G.transpose());
    *skew_residual =
        skew.cwiseAbs().maxCoeff() / std::max(1.0, sym.cwiseAbs().maxCoeff());
  }
  return sym;
}

NormalFrameResult normal_frame_curvature(const JacobiCurveSamples& samples) {
  const int n = samples.ts.size();
  const int m = samples.m;
  const double dt = samples.dt;
  const Mat& S = samples.basis.S;

  Series Z{samples.Z, 0, n - 1};
  Series Zd = fd_derivative(Z, dt);

  // G, D = G^{-1/2}, S_dot on Zd's interior.
  Series G{std::vector<Mat>(n), Zd.lo, Zd.hi};
  Series D{std::vector<Mat>(n), Zd.lo, Zd.hi};
  Series Sdot{std::vector<Mat>(n), Zd.lo, Zd.hi};
  for (int k = Zd.lo; k <= Zd.hi; ++k) {
    Mat g = Z.v[k].transpose() * S * Zd.v[k];
    g = 0.5 * (g + g.transpose());
    G.v[k] = g;
    Eigen::SelfAdjointEigenSolver<Mat> es(g);
    if (es.eigenvalues().minCoeff() < 1e-10)
      throw NumericError(
          "velocity form not positive definite: curve is not regular "
          "monotone");
    Vec inv_sqrt = es.eigenvalues().cwiseSqrt().cwiseInverse();
    D.v[k] = es.eigenvectors() * inv_sqrt.asDiagonal() *
             es.eigenvectors().transpose();
    Mat sd = Zd.v[k].transpose() * S * Zd.v[k];
    Sdot.v[k] = 0.5 * (sd - sd.transpose());
  }

  Series Dd = fd_derivative(D, dt);

  NormalFrameResult out;
  // N = D S_dot D − D⁻¹D′ + D′D⁻¹.
  Series N{std::vector<Mat>(n), Dd.lo, Dd.hi};
  double nres = 0.0;
  for (int k = Dd.lo; k <= Dd.hi; ++k) {
    Mat Dinv = D.v[k].inverse();
    Mat Nk = D.v[k] * Sdot.v[k] * D.v[k] - Dinv * Dd.v[k] + Dd.v[k] * Dinv;
    Mat sym = 0.5 * (Nk + Nk.transpose());
    nres = std::max(nres, sym.cwiseAbs().maxCoeff() /
                              std::max(1.0, Nk.cwiseAbs().maxCoeff()));
    N.v[k] = 0.5 * (Nk - Nk.transpose());
  }
  out.antisymmetry_residual = nres;

  // O′ = ½ N O integrated from the center both ways; N at half-steps by
  // 4-point interpolation.
  const int iz = samples.index_of_zero;
  if (iz < N.lo || iz > N.hi)
    throw NumericError("grid too coarse: t = 0 outside differentiable interior");
  Series O{std::vector<Mat>(n), N.lo, N.hi};
  O.v[iz] = Mat::Identity(m, m);
  auto n_mid = [&](int k, int dir) -> Mat {
    // midpoint between k and k+dir
    int k2 = k + dir;
    int ka = k - dir, kb = k2 + dir;
    if (ka < N.lo || ka > N.hi || kb < N.lo || kb > N.hi)
      return 0.5 * (N.v[k] + N.v[k2]);
    return (-N.v[ka] + 9.0 * N.v[k] + 9.0 * N.v[k2] - N.v[kb]) / 16.0;
  };
  auto sweep_o = [&](int dir) {
    for (int k = iz; k + dir >= O.lo && k + dir <= O.hi; k += dir) {
      double h = dir * dt;
      Mat Nk = N.v[k], Nm = n_mid(k, dir), Nk1 = N.v[k + dir];
      Mat Ok = O.v[k];
      Mat k1 = 0.5 * Nk * Ok;
      Mat k2 = 0.5 * Nm * (Ok + 0.5 * h * k1);
      Mat k3 = 0.5 * Nm * (Ok + 0.5 * h * k2);
      Mat k4 = 0.5 * Nk1 * (Ok + h * k3);
      O.v[k + dir] = Ok + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  };
  sweep_o(+1);
  sweep_o(-1);
  double odrift = 0.0;
  for (int k = O.lo; k <= O.hi; ++k)
    odrift = std::max(odrift, (O.v[k].transpose() * O.v[k] - Mat::Identity(m, m))
                                  .cwiseAbs()
                                  .maxCoeff());
  out.orthogonality_drift = odrift;

  // E = Z D O, F = E′, R_ij = σ(F_i, F′_j).
  Series E{std::vector<Mat>(n), O.lo, O.hi};
  for (int k = O.lo; k <= O.hi; ++k) E.v[k] = Z.v[k] * D.v[k] * O.v[k];
  Series F = fd_derivative(E, dt);
  Series Fd = fd_derivative(F, dt);

  double darboux = 0.0;
  for (int k = F.lo; k <= F.hi; ++k) {
    Mat ef = E.v[k].transpose() * S * F.v[k] - Mat::Identity(m, m);
    double scale = std::max(1.0, E.v[k].cwiseAbs().maxCoeff() *
                                     F.v[k].cwiseAbs().maxCoeff());
    darboux = std::max(darboux, ef.cwiseAbs().maxCoeff() / scale);
    Mat ff = F.v[k].transpose() * S * F.v[k];
    darboux = std::max(darboux, ff.cwiseAbs().maxCoeff() / scale);
  }
  out.darboux_residual = darboux;
  if (darboux > 1e-4)
    throw NumericError("Darboux residual exceeds 1e-4: grid too coarse");

  out.index_of_zero = iz - Fd.lo;
  for (int k = Fd.lo; k <= Fd.hi; ++k) {
    out.ts.push_back(samples.ts[k]);
    Mat R = conventions::kCurvatureExtractionSign *
            (F.v[k].transpose() * S * Fd.v[k]);
    out.R.push_back(0.5 * (R + R.transpose()));
    out.E.push_back(E.v[k]);
    out.F.push_back(F.v[k]);
  }
  if (out.index_of_zero < 0 || out.index_of_zero >= (int)out.R.size())
    throw NumericError("grid too coarse: t = 0 outside curvature interior");
  return out;
}

Mat canonical_complement(const ReducedSystem& sys,
                         const dynamics::CotangentState& s) {
  const int d = sys.dim();
  const int m = d - 1;
  dynamics::ReducedBasis rb = dynamics::reduced_tangent_basis(sys, s);
  Mat g = sys.base.metric(s.q);
  Vec ph = sys.base.metric_inv(s.q) * s.p;
  double pnorm2 = ph.dot(g * ph);
  geometry::GradHess gh = geometry::grad_hess(sys.base, *sys.potential, s.q);
  Mat Jc = sys.Jc(s.q);
  Vec Jp = Jc * ph;

  Mat out(2 * m, m);
  for (int i = 0; i < m; ++i) {
    Vec v = rb.vert.col(i);
    Vec cc = dynamics::horizontal_lift(sys, s.q, s.p, v);
    cc -= 0.5 * dynamics::vertical_lift(sys, s.q, Vec(Jc * v));
    double a = v.dot(g * (Jp + 2.0 * gh.grad)) / (2.0 * pnorm2);
    cc -= a * dynamics::vertical_lift(sys, s.q, ph);
    out.col(i) = rb.project(cc);
  }
  return out;
}

double principal_angle(const Mat& A, const Mat& B) {
  Eigen::HouseholderQR<Mat> qa(A), qb(B);
  Mat Qa = qa.householderQ() * Mat::Identity(A.rows(), A.cols());
  Mat Qb = qb.householderQ() * Mat::Identity(B.rows(), B.cols());
  Eigen::JacobiSVD<Mat> svd(Qa.transpose() * Qb);
  double smin = svd.singularValues().minCoeff();
  return std::acos(std::clamp(smin, -1.0, 1.0));
}

VerificationReport verify_curvature(
    const ReducedSystem& sys,
    const std::vector<dynamics::CotangentState>& points, double tol,
    double t_half) {
  VerificationReport rep;
  rep.tol = tol;
  for (const auto& s : points) {
    VerificationPoint vp;
    vp.state = s;
    try {
      JacobiCurveOptions opts;
      JacobiCurveSamples js = jacobi_curve(sys, s, t_half, opts);
      NormalFrameResult nf = normal_frame_curvature(js);
      vp.oracle = nf.R_at_zero();
      // Same fiber basis as the oracle's E(0).
      Mat fiber0(sys.dim(), js.m);
      {
        FiberBasisBuilder fb{sys, Mat(), Mat::Identity(js.m, js.m)};
        if (sys.dim() >= 3) {
          Mat ginv0 = sys.base.metric_inv(s.q);
          fb.reference =
              geometry::orthonormal_complement(sys.base, s.q, ginv0 * s.p);
        }
        fiber0 = fb.at(s.q, s.p);
      }
      vp.closed_form = curvature::curvature_matrix(sys, s, fiber0);
      vp.error = (vp.oracle - vp.closed_form).norm() /
                 std::max(1.0, vp.closed_form.norm());
      vp.ok = vp.error <= tol;
    } catch (const std::exception& e) {
      vp.failure = e.what();
      vp.ok = false;
      ++rep.failures;
    }
    rep.points.push_back(std::move(vp));
  }
  for (const auto& vp : rep.points)
    if (vp.failure.empty()) rep.max_error = std::max(rep.max_error, vp.error);
  rep.passed = rep.failures == 0 &&
               std::all_of(rep.points.begin(), rep.points.end(),
                           [](const VerificationPoint& vp) { return vp.ok; });
  return rep;
}

}  // namespace srcurv::grassmann
