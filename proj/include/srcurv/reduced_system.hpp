#pragma once

// The post-reduction object: base chart with induced metric, magnetic
// tensors, descended potential, and the level constants.  Everything
// downstream (flows, curvature forms, Jacobi curves, diagnostics) works
// on the cotangent bundle of this base.

#include <string>

#include "srcurv/geometry.hpp"

namespace srcurv {

struct ReducedSystem {
  geometry::ChartedMetric base;
  geometry::MagneticTensor magnetic;  // trivial when s = 0
  FieldPtr potential;                 // W on the base
  double c0 = 0.5;                    // energy level
  std::string name;

  int dim() const { return base.dim(); }

  double W(const Vec& q) const { return potential->value(q); }
  /// c0 + W(q); throws if nonpositive (the working region requires it).
  double energy_gap(const Vec& q) const {
    double e = c0 + W(q);
    if (e <= 0.0)
      throw NumericError("c0 + W(q) must stay positive on the working region");
    return e;
  }
  Mat Jc(const Vec& q) const { return magnetic.tensor_combined(base, q); }
  Mat Omega(const Vec& q) const {
    return magnetic.trivial() ? Mat::Zero(dim(), dim()) : magnetic.combined(q);
  }

  /// Rescaled magnetic levels, same geometry.
  ReducedSystem with_levels(const Vec& c) const {
    ReducedSystem out = *this;
    out.magnetic = magnetic.with_levels(c);
    return out;
  }
};

}  // namespace srcurv
