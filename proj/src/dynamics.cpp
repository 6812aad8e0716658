#include "srcurv/dynamics.hpp"

#include <cmath>
#include <sstream>

namespace srcurv::dynamics {

namespace {

struct HamJet {
  Mat g_inv;
  std::vector<Mat> dginv;
  Vec dW;
  Mat omega;
};

HamJet ham_jet(const ReducedSystem& sys, const Vec& q) {
  const int d = sys.dim();
  geometry::MetricJet mj = sys.base.jet(q, 1);
  HamJet out;
  out.g_inv = mj.g_inv;
  out.dginv.resize(d);
  for (int k = 0; k < d; ++k) out.dginv[k] = -mj.g_inv * mj.dg[k] * mj.g_inv;
  out.dW.resize(d);
  for (int k = 0; k < d; ++k) out.dW[k] = sys.potential->d1(k, q);
  out.omega = sys.Omega(q);
  return out;
}

void check_domain(const ReducedSystem& sys, const Vec& q) {
  if (!sys.base.in_domain(q))
    throw NumericError("chart exit without periodic wrap during integration");
}

}  // namespace

double hamiltonian(const ReducedSystem& sys, const Vec& q, const Vec& p) {
  return 0.5 * p.dot(sys.base.metric_inv(q) * p) + sys.W(q);
}

Vec rhs(const ReducedSystem& sys, const Vec& x) {
  const int d = sys.dim();
  Vec q = x.head(d), p = x.tail(d);
  check_domain(sys, q);
  HamJet jet = ham_jet(sys, q);
  Vec qdot = jet.g_inv * p;
  Vec pdot(d);
  for (int i = 0; i < d; ++i)
    pdot[i] = -0.5 * p.dot(jet.dginv[i] * p) - jet.dW[i];
  pdot += jet.omega * qdot;
  Vec out(2 * d);
  out << qdot, pdot;
  return out;
}

Mat rhs_jacobian(const ReducedSystem& sys, const Vec& x) {
  const int d = sys.dim();
  Vec q = x.head(d), p = x.tail(d);
  check_domain(sys, q);
  geometry::MetricJet mj = sys.base.jet(q, 2);
  std::vector<Mat> dginv(d), ddginv_row(d);
  for (int k = 0; k < d; ++k) dginv[k] = -mj.g_inv * mj.dg[k] * mj.g_inv;
  Vec dW(d);
  Mat ddW(d, d);
  for (int k = 0; k < d; ++k) {
    dW[k] = sys.potential->d1(k, q);
    for (int l = k; l < d; ++l) {
      double v = sys.potential->d2(k, l, q);
      ddW(k, l) = v;
      ddW(l, k) = v;
    }
  }
  Mat omega = sys.Omega(q);
  std::vector<Mat> domega =
      sys.magnetic.trivial() ? std::vector<Mat>(d, Mat::Zero(d, d))
                             : sys.magnetic.combined_d1(q);
  Vec qdot = mj.g_inv * p;

  Mat J = Mat::Zero(2 * d, 2 * d);
  // ∂q̇/∂q and ∂q̇/∂p
  for (int l = 0; l < d; ++l) J.block(0, l, d, 1) = dginv[l] * p;
  J.block(0, d, d, d) = mj.g_inv;
  // ∂ṗ/∂q
  for (int l = 0; l < d; ++l) {
    // ∂_l ∂_i g^{-1} = −g⁻¹ ∂_l∂_i g g⁻¹ + g⁻¹∂_l g g⁻¹∂_i g g⁻¹ + g⁻¹∂_i g g⁻¹∂_l g g⁻¹
    for (int i = 0; i < d; ++i) {
      Mat dd = -mj.g_inv * mj.ddg[l][i] * mj.g_inv +
               mj.g_inv * mj.dg[l] * mj.g_inv * mj.dg[i] * mj.g_inv +
               mj.g_inv * mj.dg[i] * mj.g_inv * mj.dg[l] * mj.g_inv;
      J(d + i, l) = -0.5 * p.dot(dd * p) - ddW(i, l);
      J(d + i, l) += (domega[l].row(i) * qdot)(0, 0);
      J(d + i, l) += (omega.row(i) * (dginv[l] * p))(0, 0);
    }
  }
  // ∂ṗ/∂p
  for (int i = 0; i < d; ++i)
    J.block(d + i, d, 1, d) = -(dginv[i] * p).transpose();
  J.block(d, d, d, d) += omega * mj.g_inv;
  return J;
}

CotangentState rescale_to_shell(const ReducedSystem& sys,
                                const CotangentState& s) {
  double kin = hamiltonian(sys, s.q, s.p) - sys.W(s.q);
  double target = sys.c0 - sys.W(s.q);
  if (kin <= 0.0 || target <= 0.0)
    throw NumericError("cannot rescale onto the energy shell");
  CotangentState out = s;
  out.p *= std::sqrt(target / kin);
  return out;
}

Vec Trajectory::at(double t) const {
  if (ts.size() < 2) return xs.front();
  double lo = std::min(ts.front(), ts.back());
  double hi = std::max(ts.front(), ts.back());
  if (t < lo - 1e-12 || t > hi + 1e-12)
    throw InputError("dense-output query outside trajectory span");
  // locate segment (grid may be increasing or decreasing)
  bool inc = ts.back() >= ts.front();
  std::size_t k = 0;
  if (inc) {
    auto it = std::upper_bound(ts.begin(), ts.end(), t);
    k = std::min<std::size_t>(std::max<long>(1, it - ts.begin()), ts.size() - 1);
  } else {
    auto it = std::upper_bound(ts.begin(), ts.end(), t, std::greater<double>());
    k = std::min<std::size_t>(std::max<long>(1, it - ts.begin()), ts.size() - 1);
  }
  double t0 = ts[k - 1], t1 = ts[k], h = t1 - t0;
  if (h == 0.0) return xs[k];
  double u = (t - t0) / h;
  double u2 = u * u, u3 = u2 * u;
  return (2 * u3 - 3 * u2 + 1) * xs[k - 1] + (u3 - 2 * u2 + u) * h * fs[k - 1] +
         (-2 * u3 + 3 * u2) * xs[k] + (u3 - u2) * h * fs[k];
}

CotangentState Trajectory::state_at(double t) const {
  Vec x = at(t);
  int d = x.size() / 2;
  return {x.head(d), x.tail(d)};
}

double Trajectory::max_relative_drift() const {
  double m = 0.0;
  double scale = std::max(std::abs(c0), 1e-30);
  for (double e : energy) m = std::max(m, std::abs(e - c0) / scale);
  return m;
}

namespace {

Vec rk4_step(const ReducedSystem& sys, const Vec& x, double h) {
  Vec k1 = rhs(sys, x);
  Vec k2 = rhs(sys, x + 0.5 * h * k1);
  Vec k3 = rhs(sys, x + 0.5 * h * k2);
  Vec k4 = rhs(sys, x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Dormand-Prince 5(4) embedded pair.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                          c5 = 8.0 / 9;
  // y5 uses a7*, error = y5 - y4.
};

bool dopri5_step(const ReducedSystem& sys, double t, const Vec& x, double& h,
                 double rtol, double atol, Vec& xout, Vec& fout,
                 const Vec& f_in) {
  const Vec& k1 = f_in;
  Vec k2 = rhs(sys, x + h * (1.0 / 5) * k1);
  Vec k3 = rhs(sys, x + h * ((3.0 / 40) * k1 + (9.0 / 40) * k2));
  Vec k4 = rhs(sys, x + h * ((44.0 / 45) * k1 + (-56.0 / 15) * k2 +
                             (32.0 / 9) * k3));
  Vec k5 = rhs(sys, x + h * ((19372.0 / 6561) * k1 + (-25360.0 / 2187) * k2 +
                             (64448.0 / 6561) * k3 + (-212.0 / 729) * k4));
  Vec k6 = rhs(sys, x + h * ((9017.0 / 3168) * k1 + (-355.0 / 33) * k2 +
                             (46732.0 / 5247) * k3 + (49.0 / 176) * k4 +
                             (-5103.0 / 18656) * k5));
  Vec y5 = x + h * ((35.0 / 384) * k1 + (500.0 / 1113) * k3 +
                    (125.0 / 192) * k4 + (-2187.0 / 6784) * k5 +
                    (11.0 / 84) * k6);
  Vec k7 = rhs(sys, y5);
  Vec y4 = x + h * ((5179.0 / 57600) * k1 + (7571.0 / 16695) * k3 +
                    (393.0 / 640) * k4 + (-92097.0 / 339200) * k5 +
                    (187.0 / 2100) * k6 + (1.0 / 40) * k7);
  double err = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    double sc = atol + rtol * std::max(std::abs(x[i]), std::abs(y5[i]));
    double e = (y5[i] - y4[i]) / sc;
    err += e * e;
  }
  err = std::sqrt(err / x.size());
  double hnew = h * std::clamp(0.9 * std::pow(std::max(err, 1e-16), -0.2),
                               0.2, 5.0);
  if (err <= 1.0) {
    xout = y5;
    fout = k7;
    h = hnew;
    return true;
  }
  h = hnew;
  return false;
}

}  // namespace

Trajectory flow(const ReducedSystem& sys, const CotangentState& initial,
                double T, const FlowOptions& opts) {
  CotangentState s = initial;
  double H0 = hamiltonian(sys, s.q, s.p);
  if (std::abs(H0 - sys.c0) > 1e-10 * std::max(1.0, std::abs(sys.c0))) {
    if (opts.renormalize)
      s = rescale_to_shell(sys, s);
    else
      throw InputError("initial state off the energy shell (pass renormalize)");
  }
  sys.energy_gap(s.q);

  const int d = sys.dim();
  Vec x(2 * d);
  x << s.q, s.p;
  double t = 0.0;
  double dir = T >= 0 ? 1.0 : -1.0;
  double Tend = T;

  Trajectory tr;
  tr.c0 = sys.c0;
  auto push = [&](double tt, const Vec& xx, const Vec& ff) {
    tr.ts.push_back(tt);
    tr.xs.push_back(xx);
    tr.fs.push_back(ff);
    tr.energy.push_back(hamiltonian(sys, xx.head(d), xx.tail(d)));
  };

  Vec f = rhs(sys, x);
  push(t, x, f);

  if (!opts.adaptive) {
    long nsteps = std::lround(std::abs(T) / std::abs(opts.dt));
    if (nsteps < 1) nsteps = 1;
    double h = Tend / nsteps;
    for (long k = 0; k < nsteps; ++k) {
      x = rk4_step(sys, x, h);
      t = (k + 1 == nsteps) ? Tend : (k + 1) * h;
      f = rhs(sys, x);
      push(t, x, f);
      sys.energy_gap(x.head(d));
    }
    return tr;
  }

  double h = dir * std::min(std::abs(opts.dt), std::abs(T));
  int rejected_in_a_row = 0;
  while (dir * (Tend - t) > 1e-14 * std::max(1.0, std::abs(Tend))) {
    if (dir * (t + h) > dir * Tend) h = Tend - t;
    Vec xout, fout;
    double htry = h;
    if (dopri5_step(sys, t, x, h, opts.rtol, opts.atol, xout, fout, f)) {
      t += htry;
      x = xout;
      f = fout;
      push(t, x, f);
      sys.energy_gap(x.head(d));
      rejected_in_a_row = 0;
    } else if (++rejected_in_a_row > 60 || std::abs(h) < 1e-15) {
      throw NumericError("adaptive step-size underflow");
    }
  }
  return tr;
}

double twisted_sigma(const ReducedSystem& sys, const Vec& q, const Vec& xi,
                     const Vec& eta) {
  const int d = sys.dim();
  double v = xi.head(d).dot(eta.tail(d)) - eta.head(d).dot(xi.tail(d));
  if (!sys.magnetic.trivial())
    v -= xi.head(d).dot(sys.Omega(q) * eta.head(d));
  return v;
}

VariationalRun variational_flow(const ReducedSystem& sys,
                                const CotangentState& initial, const Mat& xi0,
                                double T, double dt, int store_every) {
  const int d = sys.dim();
  const int k = xi0.cols();
  Vec x(2 * d);
  x << initial.q, initial.p;
  Mat Xi = xi0;

  double dir = T >= 0 ? 1.0 : -1.0;
  long nsteps = std::lround(std::abs(T) / dt);
  if (nsteps < 1) nsteps = 1;
  double h = dir * std::abs(T) / nsteps;

  VariationalRun run;
  auto push = [&](double tt) {
    run.ts.push_back(tt);
    run.xs.push_back(x);
    run.xis.push_back(Xi);
  };
  push(0.0);

  auto joint_rhs = [&](const Vec& xx, const Mat& XX, Vec& fx, Mat& fX) {
    fx = rhs(sys, xx);
    fX = rhs_jacobian(sys, xx) * XX;
  };

  Vec fx1(2 * d), fx2(2 * d), fx3(2 * d), fx4(2 * d);
  Mat fX1(2 * d, k), fX2(2 * d, k), fX3(2 * d, k), fX4(2 * d, k);
  for (long step = 0; step < nsteps; ++step) {
    joint_rhs(x, Xi, fx1, fX1);
    joint_rhs(x + 0.5 * h * fx1, Xi + 0.5 * h * fX1, fx2, fX2);
    joint_rhs(x + 0.5 * h * fx2, Xi + 0.5 * h * fX2, fx3, fX3);
    joint_rhs(x + h * fx3, Xi + h * fX3, fx4, fX4);
    x += (h / 6.0) * (fx1 + 2.0 * fx2 + 2.0 * fx3 + fx4);
    Xi += (h / 6.0) * (fX1 + 2.0 * fX2 + 2.0 * fX3 + fX4);
    if ((step + 1) % store_every == 0 || step + 1 == nsteps)
      push((step + 1) * h);
  }
  return run;
}

TransportRun inverse_transport(const ReducedSystem& sys,
                               const CotangentState& initial, double t_min,
                               double t_max, double dt) {
  if (t_min > 0.0 || t_max < 0.0)
    throw InputError("inverse transport grid must contain t = 0");
  const int d = sys.dim();
  long n_neg = std::lround(-t_min / dt);
  long n_pos = std::lround(t_max / dt);

  TransportRun run;
  run.dt = dt;
  run.ts.resize(n_neg + n_pos + 1);
  run.xs.resize(n_neg + n_pos + 1);
  run.psi.resize(n_neg + n_pos + 1);
  run.index_of_zero = n_neg;

  Vec x0(2 * d);
  x0 << initial.q, initial.p;

  auto sweep = [&](double h, long nsteps, int sign) {
    Vec x = x0;
    Mat Psi = Mat::Identity(2 * d, 2 * d);
    run.ts[run.index_of_zero] = 0.0;
    run.xs[run.index_of_zero] = x0;
    run.psi[run.index_of_zero] = Psi;
    auto joint = [&](const Vec& xx, const Mat& PP, Vec& fx, Mat& fP) {
      fx = rhs(sys, xx);
      fP = -PP * rhs_jacobian(sys, xx);
    };
    Vec fx1, fx2, fx3, fx4;
    Mat fP1, fP2, fP3, fP4;
    for (long k = 0; k < nsteps; ++k) {
      joint(x, Psi, fx1, fP1);
      joint(x + 0.5 * h * fx1, Psi + 0.5 * h * fP1, fx2, fP2);
      joint(x + 0.5 * h * fx2, Psi + 0.5 * h * fP2, fx3, fP3);
      joint(x + h * fx3, Psi + h * fP3, fx4, fP4);
      x += (h / 6.0) * (fx1 + 2.0 * fx2 + 2.0 * fx3 + fx4);
      Psi += (h / 6.0) * (fP1 + 2.0 * fP2 + 2.0 * fP3 + fP4);
      long idx = run.index_of_zero + sign * (k + 1);
      run.ts[idx] = sign * (k + 1) * std::abs(h);
      run.xs[idx] = x;
      run.psi[idx] = Psi;
    }
  };
  sweep(dt, n_pos, +1);
  sweep(-dt, n_neg, -1);
  return run;
}

Vec vertical_lift(const ReducedSystem& sys, const Vec& q, const Vec& v) {
  const int d = sys.dim();
  Vec out = Vec::Zero(2 * d);
  out.tail(d) = sys.base.metric(q) * v;
  return out;
}

Vec horizontal_lift(const ReducedSystem& sys, const Vec& q, const Vec& p,
                    const Vec& v) {
  const int d = sys.dim();
  geometry::Christoffel gamma = geometry::christoffel(sys.base, q);
  Vec out = Vec::Zero(2 * d);
  out.head(d) = v;
  // δp_k = Γ^l_{ik} v^i p_l
  for (int k = 0; k < d; ++k) {
    double s = 0.0;
    for (int i = 0; i < d; ++i)
      for (int l = 0; l < d; ++l) s += gamma[l](i, k) * v[i] * p[l];
    out[d + k] = s;
  }
  return out;
}

Vec ReducedBasis::gauge_fix(const Vec& xi) const {
  double th = theta.dot(xi);
  double dh = dH.dot(xi);
  double th_h = theta.dot(hvec);
  double dh_e = dH.dot(euler);
  return xi - (th / th_h) * hvec - (dh / dh_e) * euler;
}

Vec ReducedBasis::project(const Vec& xi) const {
  return solver.solve(gauge_fix(xi));
}

ReducedBasis reduced_tangent_basis(const ReducedSystem& sys,
                                   const CotangentState& s) {
  const int d = sys.dim();
  const int m = d - 1;
  if (s.p.norm() == 0.0)
    throw InputError("reduced basis undefined on the zero section");

  ReducedBasis rb;
  Mat g = sys.base.metric(s.q);
  Mat ginv = sys.base.metric_inv(s.q);
  Vec ph = ginv * s.p;

  // V_λ: g-orthonormal basis orthogonal to p^h.
  rb.vert = geometry::orthonormal_complement(sys.base, s.q, ph);

  Vec x(2 * d);
  x << s.q, s.p;
  rb.hvec = rhs(sys, x);
  rb.euler = Vec::Zero(2 * d);
  rb.euler.tail(d) = s.p;

  rb.theta = Vec::Zero(2 * d);
  rb.theta.head(d) = s.p;
  rb.dH = Vec::Zero(2 * d);
  geometry::MetricJet mj = sys.base.jet(s.q, 1);
  for (int k = 0; k < d; ++k) {
    rb.dH[k] = -0.5 * s.p.dot(mj.g_inv * mj.dg[k] * mj.g_inv * s.p) +
               sys.potential->d1(k, s.q);
    rb.dH[d + k] = ph[k];
  }

  rb.B.resize(2 * d, 2 * m);
  for (int i = 0; i < m; ++i)
    rb.B.col(i) = vertical_lift(sys, s.q, rb.vert.col(i));
  for (int i = 0; i < m; ++i) {
    Vec hl = horizontal_lift(sys, s.q, s.p, rb.vert.col(i));
    // horizontal lifts satisfy θ = 0 already; remove the dH component
    double coef = rb.dH.dot(hl) / rb.dH.dot(rb.euler);
    rb.B.col(m + i) = hl - coef * rb.euler;
  }

  rb.S.resize(2 * m, 2 * m);
  for (int i = 0; i < 2 * m; ++i)
    for (int j = 0; j < 2 * m; ++j)
      rb.S(i, j) = twisted_sigma(sys, s.q, rb.B.col(i), rb.B.col(j));

  rb.solver.compute(rb.B);
  return rb;
}

std::string trajectory_csv(const Trajectory& tr) {
  std::ostringstream os;
  os.precision(17);
  const int d = tr.xs.front().size() / 2;
  os << "t";
  for (int i = 0; i < d; ++i) os << ",q" << (i + 1);
  for (int i = 0; i < d; ++i) os << ",p" << (i + 1);
  os << ",H,drift\n";
  double scale = std::max(std::abs(tr.c0), 1e-30);
  for (std::size_t k = 0; k < tr.ts.size(); ++k) {
    os << tr.ts[k];
    for (int i = 0; i < 2 * d; ++i) os << ',' << tr.xs[k][i];
    os << ',' << tr.energy[k] << ',' << (tr.energy[k] - tr.c0) / scale << "\n";
  }
  return os.str();
}

}  // namespace srcurv::dynamics
