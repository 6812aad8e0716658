#pragma once

// Reduced Jacobi curves in the fixed symplectic basis, regularity and
// velocity forms, normal moving frames, and curvature extraction — the
// independent oracle against which the closed-form curvature evaluator
// is cross-validated.

#include <vector>

#include "srcurv/curvature.hpp"
#include "srcurv/dynamics.hpp"

namespace srcurv::grassmann {

struct JacobiCurveSamples {
  std::vector<double> ts;   // uniform, contains t = 0
  double dt = 0.0;
  int index_of_zero = 0;
  int m = 0;
  dynamics::ReducedBasis basis;   // fixed basis of the reduced space at λ
  std::vector<Mat> Z;             // 2m × m coordinates of e^{−t h}Π(λ(t))
  std::vector<Mat> Zdot;          // central-difference derivative
  double lagrangian_residual = 0.0;  // max |σ(ẑ_i, ẑ_j)| on unit columns

  const Mat& sigma() const { return basis.S; }
};

struct JacobiCurveOptions {
  double dt = 1e-3;
  /// Initial fiber frame at each grid point: defaults to the g-orthonormal
  /// complement; a fixed orthogonal change U may be applied at t = 0 for
  /// gauge-invariance tests.
  std::optional<Mat> initial_rotation;
};

/// Sample the Jacobi curve on the symmetric grid [−t_half, t_half].
JacobiCurveSamples jacobi_curve(const ReducedSystem& sys,
                                const dynamics::CotangentState& s,
                                double t_half,
                                const JacobiCurveOptions& opts = {});

/// Velocity form G(t) = sym σ(Z_i, Ż_j) at grid index k; the skew part
/// must stay below 1e-6 (reported via *skew_residual).
Mat velocity_form(const JacobiCurveSamples& samples, int k,
                  double* skew_residual = nullptr);

struct NormalFrameResult {
  std::vector<double> ts;      // interior grid where R is available
  std::vector<Mat> R;          // curvature matrices in the frame E(t)
  int index_of_zero = 0;
  double antisymmetry_residual = 0.0;  // N(t) symmetric part
  double orthogonality_drift = 0.0;    // ‖OᵀO − I‖ over the run
  double darboux_residual = 0.0;       // σ(E,F)−I and σ(F,F) defects
  std::vector<Mat> E, F;       // frames on the same interior grid

  const Mat& R_at_zero() const { return R[index_of_zero]; }
};

/// Normal-frame curvature extraction:
///   D = G^{−1/2},  N = D S_dot D − D⁻¹D′ + D′D⁻¹ with S_dot = σ(Ż,Ż),
///   O′ = ½ N O,  E = Z D O,  F = E′,  R_ij = σ(F_i, F′_j).
/// Throws NumericError if G is not SPD (curve not regular monotone) or
/// the Darboux residual exceeds 1e-4.
NormalFrameResult normal_frame_curvature(const JacobiCurveSamples& samples);

/// The canonical-complement frame built from the closed-form expression
/// (horizontal lift corrected by the magnetic and potential terms),
/// expressed in the fixed 2m basis; columns span the complement.
Mat canonical_complement(const ReducedSystem& sys,
                         const dynamics::CotangentState& s);

/// Principal angle (radians) between the column spans of two bases of
/// the same coordinate space.
double principal_angle(const Mat& A, const Mat& B);

struct VerificationPoint {
  dynamics::CotangentState state;
  Mat closed_form;   // curvature matrix from the closed-form evaluator
  Mat oracle;        // R(0) from the normal-frame extraction
  double error = 0.0;
  bool ok = false;
  std::string failure;
};

struct VerificationReport {
  std::vector<VerificationPoint> points;
  double max_error = 0.0;
  double tol = 0.0;
  int failures = 0;  // oracle failures (reported, not fatal)
  bool passed = false;
};

/// Compare the closed-form curvature matrix against the oracle at the
/// sample states.  Error metric: ‖Δ‖_F / max(1, ‖closed‖_F).
VerificationReport verify_curvature(const ReducedSystem& sys,
                                    const std::vector<dynamics::CotangentState>& points,
                                    double tol, double t_half = 0.05);

}  // namespace srcurv::grassmann
