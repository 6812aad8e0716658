#pragma once

// The reduced curvature form of the magnetic + potential system and the
// hyperbolicity criteria built on it: pointwise negativity (the
// authoritative test) and the printed global curvature-bound variants.

#include <optional>
#include <string>

#include "srcurv/dynamics.hpp"
#include "srcurv/reduced_system.hpp"

namespace srcurv::curvature {

/// The seven summands of the curvature form, in printed order.
struct TermBreakdown {
  double riemann = 0.0;      // g(R(p^h, v)p^h, v)
  double nabla_j = 0.0;      // g(∇J^c(p^h, v), v)
  double j_squared = 0.0;    // ¼ g(J^c v, J^c v)
  double jp_squared = 0.0;   // 3/(8(c0+W)) g(J^c p^h, v)²
  double cross = 0.0;        // 3/(2(c0+W)) g(v, ∇W) g(J^c p^h, v)
  double grad_w = 0.0;       // 3/(2(c0+W)) g(v, ∇W)²
  double hess_w = 0.0;       // Hess W(v, v)
  double total() const {
    return riemann + nabla_j + j_squared + jp_squared + cross + grad_w + hess_w;
  }
};

/// r_λ(v) for v ∈ V_λ (g(p^h, v) = 0 within 1e-10; λ on shell within
/// 1e-8).  Throws on precondition violations.
double curvature_form(const ReducedSystem& sys,
                      const dynamics::CotangentState& s, const Vec& v,
                      TermBreakdown* breakdown = nullptr);

/// Matrix of the polarized form on a g-orthonormal basis of V_λ (the
/// basis from dynamics::reduced_tangent_basis when `basis` is omitted).
Mat curvature_matrix(const ReducedSystem& sys,
                     const dynamics::CotangentState& s,
                     const std::optional<Mat>& basis = std::nullopt);

enum class CriterionMode { kPointwise, kGlobalBound, kPurePotential, kPureMagnetic };

/// External mode tokens: theorem3, theorem4, corollary1, corollary2.
std::string mode_token(CriterionMode mode);
CriterionMode mode_from_token(const std::string& token);

struct CriterionGrids {
  int q = 9;        // per-axis base grid
  int sphere = 24;  // direction samples
  int refine_steps = 20;
};

struct CriterionReport {
  CriterionMode mode = CriterionMode::kPointwise;
  bool satisfied = false;
  bool applicable = true;        // false when m = 0
  double sup_value = 0.0;        // sup of r (pointwise) or of the LHS (global)
  double k_max = 0.0;            // global modes only
  double margin = 0.0;           // −sup (pointwise) or −k_max − sup (global)
  bool lhs_positive = false;     // global modes: LHS came out positive
  bool unsatisfiable = false;    // global modes: LHS ≥ 0 with k_max ≥ 0
  Vec argmax_q, argmax_w, argmax_v;
  int grid_q = 0, grid_sphere = 0;
  /// Pure-magnetic mode: the corresponding global-bound terms evaluated at
  /// the same argmax, surfacing the printed-variant discrepancy.
  std::optional<double> magnetic_bound_terms;
};

/// Pointwise negativity of the curvature form over the region: sup over
/// (q, unit direction w, v ⊥ w) of the largest eigenvalue of the
/// curvature matrix with ‖p^h‖ = √(2(c0+W)).  Satisfied iff sup < 0.
CriterionReport criterion_pointwise(const ReducedSystem& sys,
                                    const geometry::Region& region,
                                    const CriterionGrids& grids = {});

/// The printed global curvature-bound criterion (and its pure-potential /
/// pure-magnetic specializations): maximizes the printed left-hand side
/// over the unit sphere bundle and compares against −k_max.
CriterionReport criterion_global(const ReducedSystem& sys,
                                 const geometry::Region& region,
                                 CriterionMode mode,
                                 const CriterionGrids& grids = {});

}  // namespace srcurv::curvature
