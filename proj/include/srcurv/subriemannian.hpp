#pragma once

// Sub-Riemannian structures with commuting transversal symmetries:
// validation of the standing assumptions and reduction to a magnetic +
// potential system on the quotient chart.
//
// Conventions for the chart of the total space: the last `s` coordinates
// are the orbit coordinates of the symmetry fields (each X_i has zero
// components along the first n−s coordinates), so the quotient chart is
// obtained by dropping them and the slice is {z = slice_z}.

#include <functional>
#include <optional>
#include <vector>

#include "srcurv/reduced_system.hpp"

namespace srcurv {

/// Vector field on the total chart: q (dim n) -> components (dim n).
using VectorField = std::function<Vec(const Vec&)>;

struct SRStructure {
  int n = 0;  // total dimension
  int s = 0;  // corank = number of symmetries
  std::vector<VectorField> frame;       // n−s orthonormal fields spanning 𝒟
  std::vector<VectorField> symmetries;  // X_1..X_s
  FieldPtr potential;                   // W on the total space
  Vec slice_z;                          // orbit coordinates of the slice
  /// Indices (0-based, into symmetries) spanning the derived algebra when
  /// the symmetry algebra is noncommutative; levels there must vanish.
  std::vector<int> derived_indices;
  std::string name;

  int base_dim() const { return n - s; }
};

struct ValidationReport {
  bool passed = false;
  double distribution_invariance = 0.0;  // (a) L_X F off 𝒟⊕span{X}... X-part
  double metric_invariance = 0.0;        // (b) skew defect of the frame action
  double commutators = 0.0;              // (c) pairwise [X_i, X_j]
  double potential_invariance = 0.0;     // (d) X_i(W)
  bool bracket_generating = false;       // (e) iterated brackets span TM
  bool level_rule_ok = true;             // levels vanish on derived directions
  std::string failure;

  double max_residual() const {
    return std::max(std::max(distribution_invariance, metric_invariance),
                    std::max(commutators, potential_invariance));
  }
};

/// Check the standing assumptions at the sample points (residual
/// tolerance 1e-8, finite-difference Lie brackets with step 1e-5).
/// Pass `levels` to also enforce the noncommutative level rule.
ValidationReport validate(const SRStructure& S, const std::vector<Vec>& samples,
                          std::optional<Vec> levels = std::nullopt);

/// Reduce to the quotient chart: induced metric from the 𝒟 inner
/// product, dω_i from the connection form annihilating 𝒟, J_i from
/// g(J_i v, w) = dω_i(v, w), W descended.  Throws InputError if the
/// level rule is violated, NumericError if the slice is not transversal.
ReducedSystem reduce(const SRStructure& S, double c0, const Vec& c);

/// [U, V] at q by central finite differences of the fields (step 1e-5).
Vec lie_bracket(const VectorField& U, const VectorField& V, const Vec& q);

}  // namespace srcurv
