#pragma once

// Chart-based Riemannian geometry on the reduced manifold: metric jets,
// Christoffel symbols, curvature tensor, gradients/Hessians, covariant
// derivatives of (1,1) tensors, sectional curvature bounds, and the
// magnetic tensors J_i derived from the two-forms dω_i.

#include <functional>
#include <optional>
#include <vector>

#include "srcurv/fields.hpp"
#include "srcurv/types.hpp"

namespace srcurv::geometry {

/// Γ^k_{ij}: gamma[k](i,j), symmetric in (i,j).
using Christoffel = std::vector<Mat>;

/// Curvature tensor components C^l_{ijk} = component l of R(e_i,e_j)e_k,
/// oriented so that sec(u,v) = g(R(u,v)u, v) / gram(u,v).
struct CurvatureTensor {
  int dim = 0;
  std::vector<double> c;  // l*d^3 + i*d^2 + j*d + k
  double operator()(int l, int i, int j, int k) const {
    return c[((l * dim + i) * dim + j) * dim + k];
  }
  double& at(int l, int i, int j, int k) {
    return c[((l * dim + i) * dim + j) * dim + k];
  }
};

/// Metric value and chart partials at a point.
struct MetricJet {
  Mat g;                        // d x d
  Mat g_inv;
  std::vector<Mat> dg;          // dg[k](i,j) = ∂_k g_ij
  std::vector<std::vector<Mat>> ddg;  // ddg[k][l](i,j) = ∂_k ∂_l g_ij
};

struct Region {
  Vec lo, hi;
};

class ChartedMetric {
 public:
  ChartedMetric() = default;
  /// Components: symmetric d x d array of fields (row-major, full matrix).
  ChartedMetric(int dim, std::vector<FieldPtr> components);

  /// Conformal metric e^{2φ} δ in any dimension.
  static ChartedMetric conformal(int dim, const FieldPtr& phi);

  int dim() const { return dim_; }

  Mat metric(const Vec& q) const;
  Mat metric_inv(const Vec& q) const;
  MetricJet jet(const Vec& q, int order = 2) const;

  /// Periods per coordinate (0 = not periodic); metadata for region grids.
  Vec periods;
  /// Chart domain guard; evaluation outside raises NumericError in flow.
  std::function<bool(const Vec&)> domain;

  /// Optional closed forms, used by tests as cross-checks only.
  std::function<Christoffel(const Vec&)> closed_christoffel;
  std::function<double(const Vec&, const Vec&, const Vec&)> closed_sectional;

  bool in_domain(const Vec& q) const { return !domain || domain(q); }

 private:
  int dim_ = 0;
  std::vector<FieldPtr> comp_;  // row-major d*d
};

/// Magnetic data: per-symmetry two-form components dω_i (antisymmetric
/// matrices Ω^{(i)}_{jk}(q), fields for j<k) plus level weights c.
class MagneticTensor {
 public:
  MagneticTensor() = default;
  MagneticTensor(int dim, int s,
                 std::vector<std::vector<FieldPtr>> upper_components,
                 Vec levels);

  /// Surface convenience: dω = b(q) · (area form of M).
  static MagneticTensor surface(const ChartedMetric& M, const FieldPtr& b,
                                double level);

  int dim() const { return dim_; }
  int symmetries() const { return s_; }
  const Vec& levels() const { return c_; }
  bool trivial() const { return s_ == 0; }

  /// Two-form of symmetry i as an antisymmetric matrix.
  Mat two_form(int i, const Vec& q) const;
  /// Ω^c = Σ c_i dω_i.
  Mat combined(const Vec& q) const;
  /// ∂_k Ω^c.
  std::vector<Mat> combined_d1(const Vec& q) const;

  /// J_i with g(J_i v, w) = dω_i(v, w):  J^a_b = g^{ac} Ω_{bc}.
  Mat tensor(int i, const ChartedMetric& M, const Vec& q) const;
  /// J^c = Σ c_i J_i.
  Mat tensor_combined(const ChartedMetric& M, const Vec& q) const;

  /// Rescale levels (used by reduction level-linearity checks).
  MagneticTensor with_levels(const Vec& c) const;

 private:
  int dim_ = 0;
  int s_ = 0;
  // comp_[i] holds fields for the strictly-upper entries (j<k) row-major.
  std::vector<std::vector<FieldPtr>> comp_;
  Vec c_;
};

Christoffel christoffel(const ChartedMetric& M, const Vec& q);
/// ∂_l Γ^k_{ij}: dgamma[l][k](i,j).
std::vector<Christoffel> christoffel_d1(const ChartedMetric& M, const Vec& q);

CurvatureTensor riemann(const ChartedMetric& M, const Vec& q);

/// g(R(u,v)w, z) for the orientation above.
double curvature_quad(const ChartedMetric& M, const CurvatureTensor& R,
                      const Vec& q, const Vec& u, const Vec& v, const Vec& w,
                      const Vec& z);

/// Sectional curvature of span{u,v}; throws on degenerate planes
/// (Gram determinant below 1e-12 relative).
double sectional(const ChartedMetric& M, const Vec& q, const Vec& u,
                 const Vec& v);

/// Gradient (vector) and covariant Hessian (bilinear form matrix) of W.
struct GradHess {
  Vec grad;
  Mat hess;
};
GradHess grad_hess(const ChartedMetric& M, const ScalarFieldBase& W,
                   const Vec& q);

/// (∇_a J^c)(b): covariant derivative of the combined magnetic tensor in
/// direction a, applied to b.
Vec nabla_J(const ChartedMetric& M, const MagneticTensor& J, const Vec& q,
            const Vec& a, const Vec& b);

struct KmaxReport {
  double k_max = 0.0;
  Vec argmax_q;
  int grid = 0;
};

/// Maximum sectional curvature over the region: product grid over q and
/// 2-planes, then local ascent refinement at the incumbent.
KmaxReport k_max(const ChartedMetric& M, const Region& region, int grid_q,
                 int grid_plane = 16);

/// g-orthonormal basis of the tangent space at q (columns), built from
/// the Cholesky factor of g.
Mat orthonormal_frame(const ChartedMetric& M, const Vec& q);

/// Completes unit w (g-unit) to a g-orthonormal basis {w, v_1..v_{d-1}};
/// returns the v_i as columns.
Mat orthonormal_complement(const ChartedMetric& M, const Vec& q, const Vec& w);

}  // namespace srcurv::geometry
