#include "srcurv/hyperbolic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/QR>

namespace srcurv::hyperbolic {

namespace {

/// One RK4 burst of the joint (state, frame) system.
void burst(const ReducedSystem& sys, Vec& x, Mat& Xi, double T, double dt) {
  long nsteps = std::max(1L, std::lround(std::abs(T) / dt));
  double h = T / nsteps;
  const int n = x.size();
  Vec fx1(n), fx2(n), fx3(n), fx4(n);
  Mat fX1, fX2, fX3, fX4;
  for (long k = 0; k < nsteps; ++k) {
    fx1 = dynamics::rhs(sys, x);
    fX1 = dynamics::rhs_jacobian(sys, x) * Xi;
    Vec x2 = x + 0.5 * h * fx1;
    fx2 = dynamics::rhs(sys, x2);
    fX2 = dynamics::rhs_jacobian(sys, x2) * (Xi + 0.5 * h * fX1);
    Vec x3 = x + 0.5 * h * fx2;
    fx3 = dynamics::rhs(sys, x3);
    fX3 = dynamics::rhs_jacobian(sys, x3) * (Xi + 0.5 * h * fX2);
    Vec x4 = x + h * fx3;
    fx4 = dynamics::rhs(sys, x4);
    fX4 = dynamics::rhs_jacobian(sys, x4) * (Xi + h * fX3);
    x += (h / 6.0) * (fx1 + 2.0 * fx2 + 2.0 * fx3 + fx4);
    Xi += (h / 6.0) * (fX1 + 2.0 * fX2 + 2.0 * fX3 + fX4);
  }
}

}  // namespace

double LyapunovReport::pattern_residual(double lambda) const {
  if (exponents.size() != 4) return std::numeric_limits<double>::quiet_NaN();
  Vec expect(4);
  expect << lambda, 0.0, 0.0, -lambda;
  return (exponents - expect).cwiseAbs().maxCoeff();
}

LyapunovReport lyapunov(const ReducedSystem& sys,
                        const dynamics::CotangentState& initial, double T,
                        const LyapunovOptions& opts) {
  const int d = sys.dim();
  const int k = 2 * d;
  Vec x(k);
  x << initial.q, initial.p;
  Mat Q = Mat::Identity(k, k);

  long nwin = std::max(1L, std::lround(T / opts.renorm_dt));
  double win = T / nwin;
  double settle_t = opts.settle_fraction * T;

  LyapunovReport rep;
  rep.T = T;
  rep.renorm_dt = opts.renorm_dt;

  Vec cum = Vec::Zero(k);
  Vec cum_at_settle = Vec::Zero(k);
  double t_settle = 0.0;
  bool settled = false;

  for (long w = 0; w < nwin; ++w) {
    burst(sys, x, Q, win, opts.dt);
    Eigen::HouseholderQR<Mat> qr(Q);
    Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
    Mat Qn = qr.householderQ() * Mat::Identity(k, k);
    for (int i = 0; i < k; ++i) {
      double r = R(i, i);
      if (r < 0) Qn.col(i) *= -1.0;
      cum[i] += std::log(std::abs(r));
    }
    Q = Qn;
    double t = (w + 1) * win;
    if (!settled && t >= settle_t) {
      cum_at_settle = cum;
      t_settle = t;
      settled = true;
    }
    rep.history_t.push_back(t);
    Vec est = settled && t > t_settle
                  ? Vec((cum - cum_at_settle) / (t - t_settle))
                  : Vec(cum / t);
    std::sort(est.data(), est.data() + k, std::greater<double>());
    rep.history.push_back(est);
  }

  rep.exponents = rep.history.back();
  rep.spectrum_sum = rep.exponents.sum();

  // Converged when estimates move < 1e-3 over the last 20% of the run.
  std::size_t tail = rep.history.size() - rep.history.size() / 5;
  if (tail >= 1 && tail < rep.history.size()) {
    double move = 0.0;
    for (std::size_t i = tail; i < rep.history.size(); ++i)
      move = std::max(move,
                      (rep.history[i] - rep.history[tail - 1]).cwiseAbs().maxCoeff());
    rep.converged = move < 1e-3;
  }
  return rep;
}

ConeCertificate cone_certificate(const ReducedSystem& sys,
                                 const dynamics::CotangentState& initial,
                                 double T, double sample_dt) {
  if (sys.dim() != 2)
    throw InputError("cone certificate is defined for surfaces (m = 1)");
  ConeCertificate cert;
  cert.trajectory_id = sys.name;
  cert.t_begin = 0.0;
  cert.t_end = T;

  dynamics::FlowOptions fopts;
  fopts.adaptive = false;
  fopts.dt = sample_dt;
  dynamics::Trajectory tr = dynamics::flow(sys, initial, T, fopts);

  // r along the trajectory on the transported unit normal; fail at the
  // first nonnegative value.
  std::vector<double> r(tr.ts.size());
  cert.delta = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < tr.ts.size(); ++i) {
    dynamics::CotangentState s = {tr.xs[i].head(2), tr.xs[i].tail(2)};
    Mat rmat = curvature::curvature_matrix(sys, s);
    r[i] = rmat(0, 0);
    if (r[i] >= 0.0) {
      cert.passed = false;
      cert.fail_time = tr.ts[i];
      std::ostringstream os;
      os << "curvature form nonnegative (" << r[i] << ") at t = " << tr.ts[i];
      cert.failure = os.str();
      cert.delta = 0.0;
      return cert;
    }
    cert.delta = std::min(cert.delta, std::sqrt(-r[i]));
  }

  // y'' = −r(t) y with the cone quadratic form Q = y·y'.
  double y = 1.0, yp = 1.0;
  cert.cone_invariant = true;
  cert.min_growth_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < tr.ts.size(); ++i) {
    double h = tr.ts[i + 1] - tr.ts[i];
    double rm = 0.5 * (r[i] + r[i + 1]);
    double q_before = y * yp;
    // RK4 on (y, y')
    auto acc = [&](double frac) { return frac < 0.5 ? r[i] : (frac > 0.5 ? r[i + 1] : rm); };
    double k1y = yp, k1p = -acc(0.0) * y;
    double k2y = yp + 0.5 * h * k1p, k2p = -acc(0.5) * (y + 0.5 * h * k1y);
    double k3y = yp + 0.5 * h * k2p, k3p = -acc(0.5) * (y + 0.5 * h * k2y);
    double k4y = yp + h * k3p, k4p = -acc(1.0) * (y + h * k3y);
    y += (h / 6.0) * (k1y + 2 * k2y + 2 * k3y + k4y);
    yp += (h / 6.0) * (k1p + 2 * k2p + 2 * k3p + k4p);
    if (y <= 0.0 || yp <= 0.0) {
      cert.cone_invariant = false;
      cert.passed = false;
      cert.fail_time = tr.ts[i + 1];
      cert.failure = "cone left the positive quadrant";
      return cert;
    }
    double ratio = (y * yp) / (q_before * std::exp(cert.delta * h));
    cert.min_growth_ratio = std::min(cert.min_growth_ratio, ratio);
  }
  cert.passed = cert.cone_invariant && cert.delta > 0.0 &&
                cert.min_growth_ratio >= 1.0 - 1e-9;
  if (!cert.passed && cert.failure.empty())
    cert.failure = "quadratic form failed the growth-rate bound";
  return cert;
}

namespace {

/// Push reduced coordinates z at λ(t0) to λ(t0 + T) along the linearized
/// flow, renormalizing in chunks; returns the final unit direction and
/// the accumulated log growth.
std::pair<Vec, double> reduced_push(const ReducedSystem& sys,
                                    const dynamics::CotangentState& from,
                                    double T, const Vec& z0) {
  dynamics::ReducedBasis rb = dynamics::reduced_tangent_basis(sys, from);
  Vec x(2 * sys.dim());
  x << from.q, from.p;
  Mat Xi = rb.B * z0;
  double logsum = 0.0;
  double chunk = 1.0;
  double remaining = T;
  double dir = T >= 0 ? 1.0 : -1.0;
  while (std::abs(remaining) > 1e-12) {
    double step = dir * std::min(chunk, std::abs(remaining));
    burst(sys, x, Xi, step, 1e-3);
    remaining -= step;
    double n = Xi.norm();
    Xi /= n;
    logsum += std::log(n);
  }
  dynamics::CotangentState end{x.head(sys.dim()), x.tail(sys.dim())};
  dynamics::ReducedBasis rbe = dynamics::reduced_tangent_basis(sys, end);
  Vec z = rbe.project(Xi.col(0));
  double zn = z.norm();
  logsum += std::log(zn);
  return {Vec(z / zn), logsum};
}

}  // namespace

SplittingReport splitting(const ReducedSystem& sys,
                          const dynamics::CotangentState& initial, double T) {
  SplittingReport rep;
  LyapunovReport ly = lyapunov(sys, initial, T);
  rep.top_exponent = ly.exponents.maxCoeff();
  if (rep.top_exponent <= 0.05) {
    rep.detected = false;
    rep.note = "no hyperbolic splitting detected";
    return rep;
  }

  const int m = sys.dim() - 1;
  Vec seed = Vec::Ones(2 * m).normalized();

  // E+ at λ0: push a generic vector forward from λ(−T).
  dynamics::FlowOptions fopts;
  fopts.adaptive = true;
  dynamics::Trajectory back = dynamics::flow(sys, initial, -T, fopts);
  dynamics::CotangentState far_back = back.state_at(-T);
  auto [eplus, logp] = reduced_push(sys, far_back, T, seed);
  rep.e_plus = eplus;
  rep.rate_plus = logp / T;

  // E− at λ0: push backward from λ(+T).
  dynamics::Trajectory fwd = dynamics::flow(sys, initial, T, fopts);
  dynamics::CotangentState far_fwd = fwd.state_at(T);
  auto [eminus, logm] = reduced_push(sys, far_fwd, -T, seed);
  rep.e_minus = eminus;
  rep.rate_minus = logm / T;  // negative of the contraction rate

  double c = std::abs(rep.e_plus.dot(rep.e_minus));
  rep.angle = std::acos(std::clamp(c, 0.0, 1.0));

  // Invariance: push E+(λ0) to t* and compare with E+(λ(t*)) computed
  // independently from λ(t* − T).
  double tstar = std::min(1.0, T / 4);
  auto [pushed, lg] = reduced_push(sys, initial, tstar, rep.e_plus);
  (void)lg;
  dynamics::CotangentState mid = fwd.state_at(tstar);
  dynamics::Trajectory mid_back = dynamics::flow(sys, mid, -T, fopts);
  auto [indep, lg2] = reduced_push(sys, mid_back.state_at(-T), T, seed);
  (void)lg2;
  double ci = std::abs(pushed.dot(indep));
  rep.invariance_residual = std::acos(std::clamp(ci, 0.0, 1.0));

  rep.detected = true;
  return rep;
}

std::string lyapunov_csv(const LyapunovReport& rep) {
  std::ostringstream os;
  os.precision(17);
  os << "t";
  for (int i = 0; i < rep.exponents.size(); ++i) os << ",lambda_" << (i + 1);
  os << "\n";
  for (std::size_t k = 0; k < rep.history_t.size(); ++k) {
    os << rep.history_t[k];
    for (int i = 0; i < rep.history[k].size(); ++i) os << ',' << rep.history[k][i];
    os << "\n";
  }
  return os.str();
}

}  // namespace srcurv::hyperbolic
