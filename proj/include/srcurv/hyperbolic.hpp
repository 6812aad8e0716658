#pragma once

// Hyperbolicity diagnostics for the reduced flow: Lyapunov spectra by
// QR reorthonormalization, invariant splitting by power iteration on the
// reduced tangent space, and scalar cone certificates for surfaces.

#include <string>
#include <vector>

#include "srcurv/curvature.hpp"
#include "srcurv/dynamics.hpp"

namespace srcurv::hyperbolic {

struct LyapunovOptions {
  double renorm_dt = 0.5;
  double dt = 1e-3;
  /// Fraction of the run discarded before averaging (alignment transient);
  /// the convergence history still starts at t = 0.
  double settle_fraction = 0.1;
};

struct LyapunovReport {
  Vec exponents;  // sorted descending, 2(m+1) values
  double T = 0.0;
  double renorm_dt = 0.0;
  std::vector<double> history_t;
  std::vector<Vec> history;  // running estimates (sorted descending)
  bool converged = false;    // estimates moved < 1e-3 over the last 20%
  double spectrum_sum = 0.0;
  /// Surface models: deviation from the {+λ, 0, 0, −λ} pattern.
  double pattern_residual(double lambda) const;
};

LyapunovReport lyapunov(const ReducedSystem& sys,
                        const dynamics::CotangentState& initial, double T,
                        const LyapunovOptions& opts = {});

struct ConeCertificate {
  std::string trajectory_id;
  bool passed = false;
  double delta = 0.0;          // inf √(−r) over the run
  double t_begin = 0.0, t_end = 0.0;
  bool cone_invariant = false;
  double min_growth_ratio = 0.0;  // min over steps of Q_{k+1}/(Q_k e^{δ dt})
  double fail_time = 0.0;
  std::string failure;  // e.g. nonnegative curvature form at fail_time
};

/// Scalar cone certificate for surfaces (m = 1): evaluates the curvature
/// form along the trajectory, fails immediately where it is ≥ 0, else
/// integrates y'' = −r(t) y and certifies that the cone {y·y' > 0} is
/// preserved with the quadratic form growing at rate ≥ δ = inf √(−r).
ConeCertificate cone_certificate(const ReducedSystem& sys,
                                 const dynamics::CotangentState& initial,
                                 double T, double sample_dt = 0.01);

struct SplittingReport {
  bool detected = false;
  std::string note;
  Vec e_plus, e_minus;  // directions in the reduced basis coordinates at λ0
  double angle = 0.0;   // between E+ and E− (radians)
  double invariance_residual = 0.0;
  double rate_plus = 0.0, rate_minus = 0.0;  // measured expansion rates
  double top_exponent = 0.0;
};

/// E± by forward/backward power iteration of the variational flow on the
/// reduced 2m-dimensional subspace; requires the top exponent separated
/// from 0 by > 0.05.
SplittingReport splitting(const ReducedSystem& sys,
                          const dynamics::CotangentState& initial, double T);

/// Exponent time-series CSV: t, lambda_1..lambda_k.
std::string lyapunov_csv(const LyapunovReport& rep);

}  // namespace srcurv::hyperbolic
