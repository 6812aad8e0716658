#pragma once

// Hamiltonian flow of the reduced system on T*M with the twisted
// symplectic structure, its linearization, and the representative basis
// of the quotient symplectic space used by the Jacobi-curve machinery.
//
// Phase-space convention: x = [q; p].  Coordinate equations
//   q̇^i = g^{ij} p_j
//   ṗ_i = −½ ∂_i g^{jk} p_j p_k − ∂_i W + Ω_{ij} g^{jk} p_k
// with Ω = Σ c_i dω_i, equivalently ∇_{q̇} q̇ = −J^c(q̇) − ∇W.  The
// magnetic sign is fixed by this pairing of the twisted form
// σ = dq∧dp − π*Ω with g(J v, w) = Ω(v, w); see conventions.hpp.

#include <optional>
#include <vector>

#include "srcurv/reduced_system.hpp"

namespace srcurv::dynamics {

struct CotangentState {
  Vec q, p;
};

struct FlowOptions {
  bool adaptive = true;
  double dt = 1e-3;     // fixed-step size
  double rtol = 1e-9;   // adaptive relative tolerance
  double atol = 1e-12;  // adaptive absolute tolerance
  bool renormalize = false;  // rescale p onto the energy shell first
};

class Trajectory {
 public:
  std::vector<double> ts;
  std::vector<Vec> xs;      // phase points [q;p]
  std::vector<Vec> fs;      // RHS at nodes (for Hermite dense output)
  std::vector<double> energy;
  double c0 = 0.0;

  double t_begin() const { return ts.front(); }
  double t_end() const { return ts.back(); }
  /// Cubic Hermite dense output.
  Vec at(double t) const;
  CotangentState state_at(double t) const;
  double max_relative_drift() const;
};

double hamiltonian(const ReducedSystem& sys, const Vec& q, const Vec& p);
/// Phase-space RHS of the twisted Hamiltonian equations.
Vec rhs(const ReducedSystem& sys, const Vec& x);
/// Jacobian of the RHS (needs second metric/potential partials and first
/// magnetic partials).
Mat rhs_jacobian(const ReducedSystem& sys, const Vec& x);

/// Scale p so that H(q, αp) = c0.  Throws if c0 − W(q) ≤ 0 or p = 0.
CotangentState rescale_to_shell(const ReducedSystem& sys,
                                const CotangentState& s);

/// Integrate the flow for time T (T may be negative).  Off-shell initial
/// states beyond 1e-10 are rejected unless opts.renormalize is set.
Trajectory flow(const ReducedSystem& sys, const CotangentState& initial,
                double T, const FlowOptions& opts = {});

/// Twisted symplectic pairing σ(ξ, η) = (ξ_q·η_p − η_q·ξ_p) − Ω_q(ξ_q, η_q).
double twisted_sigma(const ReducedSystem& sys, const Vec& q, const Vec& xi,
                     const Vec& eta);

struct VariationalRun {
  std::vector<double> ts;
  std::vector<Vec> xs;
  std::vector<Mat> xis;  // 2d × k at each stored node
};

/// Co-integrate the state and k tangent columns with fixed-step RK4;
/// stores every `store_every`-th step (and always the endpoint).
VariationalRun variational_flow(const ReducedSystem& sys,
                                const CotangentState& initial, const Mat& xi0,
                                double T, double dt = 1e-3,
                                int store_every = 1);

/// Inverse-transport run: Ψ(t) maps tangent vectors at λ(t) back to λ(0)
/// along the linearized flow (Ψ̇ = −Ψ·DF, Ψ(0) = I), sampled on the
/// uniform grid t_min..t_max (both signs integrated from 0).
struct TransportRun {
  std::vector<double> ts;
  std::vector<Vec> xs;
  std::vector<Mat> psi;
  double dt = 0.0;
  int index_of_zero = 0;
};
TransportRun inverse_transport(const ReducedSystem& sys,
                               const CotangentState& initial, double t_min,
                               double t_max, double dt = 1e-3);

/// Fixed 2m-dimensional representative basis of the reduced symplectic
/// space at λ: columns of B span ker dH ∩ ker(p·dq), transversal to the
/// flow direction; S is the σ-Gram matrix on the basis.
struct ReducedBasis {
  Mat B;          // 2d × 2m
  Mat S;          // 2m × 2m, σ(B_i, B_j)
  Mat vert;       // d × m: g-orthonormal fiber directions v_i ⊥ p^h
  Vec hvec;       // flow direction h⃗(λ)
  Vec euler;      // fiber scaling 𝔈(λ)
  Vec theta;      // covector of p·dq on phase space
  Vec dH;         // covector of dH
  Eigen::ColPivHouseholderQR<Mat> solver;

  /// Quotient representative: subtract h⃗ and 𝔈 components, then expand
  /// in the basis columns.
  Vec project(const Vec& xi) const;
  /// The representative vector itself (before expansion).
  Vec gauge_fix(const Vec& xi) const;
};

ReducedBasis reduced_tangent_basis(const ReducedSystem& sys,
                                   const CotangentState& s);

/// Vertical phase vector of a base tangent vector v: (0, g·v).
Vec vertical_lift(const ReducedSystem& sys, const Vec& q, const Vec& v);
/// Levi-Civita horizontal phase lift of v at (q,p).
Vec horizontal_lift(const ReducedSystem& sys, const Vec& q, const Vec& p,
                    const Vec& v);

/// CSV export: t, q..., p..., H, drift.
std::string trajectory_csv(const Trajectory& tr);

}  // namespace srcurv::dynamics
