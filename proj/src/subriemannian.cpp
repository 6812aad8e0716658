#include "srcurv/subriemannian.hpp"

#include <cmath>

#include <Eigen/QR>

namespace srcurv {

namespace {

constexpr double kLieStep = 1e-5;
constexpr double kResidualTol = 1e-8;

Mat field_jacobian(const VectorField& U, const Vec& q) {
  const int n = q.size();
  Mat J(n, n);
  for (int j = 0; j < n; ++j) {
    double h = kLieStep * std::max(1.0, std::abs(q[j]));
    Vec qp = q, qm = q;
    qp[j] += h;
    qm[j] -= h;
    J.col(j) = (U(qp) - U(qm)) / (2.0 * h);
  }
  return J;
}

/// Columns: all frame fields then all symmetry fields, evaluated at q.
Mat combined_frame(const SRStructure& S, const Vec& q) {
  Mat A(S.n, S.n);
  for (int i = 0; i < S.base_dim(); ++i) A.col(i) = S.frame[i](q);
  for (int i = 0; i < S.s; ++i) A.col(S.base_dim() + i) = S.symmetries[i](q);
  return A;
}

int numeric_rank(const Mat& A) {
  Eigen::ColPivHouseholderQR<Mat> qr(A);
  qr.setThreshold(1e-6);
  return qr.rank();
}

Vec embed_slice(const SRStructure& S, const Vec& qbase) {
  Vec q(S.n);
  q.head(S.base_dim()) = qbase;
  q.tail(S.s) = S.slice_z;
  return q;
}

}  // namespace

Vec lie_bracket(const VectorField& U, const VectorField& V, const Vec& q) {
  return field_jacobian(V, q) * U(q) - field_jacobian(U, q) * V(q);
}

ValidationReport validate(const SRStructure& S, const std::vector<Vec>& samples,
                          std::optional<Vec> levels) {
  if (samples.empty()) throw InputError("validate needs at least one sample point");
  const int m = S.base_dim();
  ValidationReport rep;

  std::vector<bool> derived(S.s, false);
  for (int i : S.derived_indices) {
    if (i < 0 || i >= S.s) throw InputError("derived-algebra index out of range");
    derived[i] = true;
  }

  for (const Vec& q : samples) {
    Mat A = combined_frame(S, q);
    Eigen::FullPivLU<Mat> lu(A);
    if (!lu.isInvertible()) {
      rep.failure = "combined frame rank-deficient at a sample point";
      return rep;
    }

    for (int i = 0; i < S.s; ++i) {
      // (a) invariance of 𝒟: [X_i, F_a] must lie in 𝒟.
      // (b) isometry: its 𝒟-part must act skew-symmetrically on the frame.
      Mat C(m, m);
      for (int a = 0; a < m; ++a) {
        Vec br = lie_bracket(S.symmetries[i], S.frame[a], q);
        Vec coeff = lu.solve(br);
        rep.distribution_invariance = std::max(
            rep.distribution_invariance, coeff.tail(S.s).cwiseAbs().maxCoeff());
        C.row(a) = coeff.head(m).transpose();
      }
      Mat sym = C + C.transpose();
      rep.metric_invariance =
          std::max(rep.metric_invariance, sym.cwiseAbs().maxCoeff());

      // (d) X_i(W) = 0.
      Vec Xi = S.symmetries[i](q);
      double dW = 0.0;
      for (int k = 0; k < S.n; ++k) dW += Xi[k] * S.potential->d1(k, q);
      rep.potential_invariance = std::max(rep.potential_invariance, std::abs(dW));

      // (c) commutators; brackets landing in declared derived directions
      // are allowed.
      for (int j = i + 1; j < S.s; ++j) {
        Vec br = lie_bracket(S.symmetries[i], S.symmetries[j], q);
        Vec coeff = lu.solve(br);
        double res = 0.0;
        for (int k = 0; k < m; ++k) res = std::max(res, std::abs(coeff[k]));
        for (int k = 0; k < S.s; ++k)
          if (!derived[k]) res = std::max(res, std::abs(coeff[m + k]));
        rep.commutators = std::max(rep.commutators, res);
      }
    }

    // (e) bracket generation: frame + iterated brackets span the tangent
    // space (two bracket levels suffice for the models handled here).
    std::vector<VectorField> fields(S.frame.begin(), S.frame.end());
    std::vector<VectorField> level = fields;
    auto rank_of = [&](const std::vector<VectorField>& fs) {
      Mat B(S.n, fs.size());
      for (std::size_t col = 0; col < fs.size(); ++col) {
        Vec v = fs[col](q);
        double nv = v.norm();
        B.col(col) = nv > 0 ? Vec(v / nv) : v;
      }
      return numeric_rank(B);
    };
    for (int depth = 0; depth < 2 && rank_of(fields) < S.n; ++depth) {
      std::vector<VectorField> next;
      for (int a = 0; a < m; ++a)
        for (const VectorField& v : level) {
          VectorField fa = S.frame[a];
          next.push_back([fa, v](const Vec& x) { return lie_bracket(fa, v, x); });
        }
      for (auto& v : next) fields.push_back(v);
      level = next;
    }
    rep.bracket_generating = rank_of(fields) == S.n;
    if (!rep.bracket_generating) {
      rep.failure = "distribution fails to bracket-generate at a sample point";
      return rep;
    }
  }

  if (levels) {
    if (levels->size() != S.s) throw InputError("level vector size mismatch");
    for (int i = 0; i < S.s; ++i)
      if (derived[i] && (*levels)[i] != 0.0) {
        rep.level_rule_ok = false;
        rep.failure =
            "nonzero level on a derived-algebra symmetry; levels there must "
            "be zero for the reduction to apply";
      }
  }

  bool residual_ok = rep.max_residual() < kResidualTol;
  rep.passed = residual_ok && rep.bracket_generating && rep.level_rule_ok;
  if (!rep.passed && rep.failure.empty())
    rep.failure = "symmetry residuals exceed tolerance 1e-8";
  return rep;
}

ReducedSystem reduce(const SRStructure& S, double c0, const Vec& c) {
  const int m = S.base_dim();
  if (c.size() != S.s) throw InputError("need one level per symmetry");
  for (int i : S.derived_indices)
    if (c[i] != 0.0)
      throw InputError(
          "nonzero level on a derived-algebra symmetry; levels there must be "
          "zero for the reduction to apply");

  // Symmetries must be vertical w.r.t. the chart split so dropping the
  // orbit coordinates is the quotient projection.
  {
    Vec probe = embed_slice(S, Vec::Zero(m));
    Mat Z(S.s, S.s);
    for (int i = 0; i < S.s; ++i) {
      Vec Xi = S.symmetries[i](probe);
      if (Xi.head(m).cwiseAbs().maxCoeff() > 1e-12)
        throw NumericError(
            "slice not transversal: symmetry fields must point along the "
            "orbit coordinates");
      Z.row(i) = Xi.tail(S.s).transpose();
    }
    Eigen::FullPivLU<Mat> lu(Z);
    if (!lu.isInvertible())
      throw NumericError("slice not transversal: symmetry fields degenerate");
  }

  // Keep a copy of the structure for the closures below.
  auto Sp = std::make_shared<SRStructure>(S);

  // Horizontal lift: the unique 𝒟-vector projecting to u, as coefficients
  // in the 𝒟-frame and as a chart vector.
  auto horizontal = [Sp](const Vec& qbase, const Vec& u) {
    const int m = Sp->base_dim();
    Vec q(Sp->n);
    q.head(m) = qbase;
    q.tail(Sp->s) = Sp->slice_z;
    Mat F(Sp->n, m);
    for (int a = 0; a < m; ++a) F.col(a) = Sp->frame[a](q);
    Mat top = F.topRows(m);
    Eigen::FullPivLU<Mat> lu(top);
    if (!lu.isInvertible())
      throw NumericError("slice not transversal: 𝒟 projects degenerately");
    Vec coeff = lu.solve(u);
    return std::make_pair(coeff, Vec(F * coeff));
  };

  // Induced metric: g(u, w) = <coeff_u, coeff_w> since the frame is
  // orthonormal.  g = (T Tᵀ)^{-1} with T the projected frame matrix.
  std::vector<FieldPtr> comp(m * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      comp[i * m + j] = numeric_field(
          [Sp, i, j](const Vec& qbase) {
            const int m = Sp->base_dim();
            Vec q(Sp->n);
            q.head(m) = qbase;
            q.tail(Sp->s) = Sp->slice_z;
            Mat T(m, m);
            for (int a = 0; a < m; ++a) T.col(a) = Sp->frame[a](q).head(m);
            Mat ginv = T * T.transpose();
            Eigen::FullPivLU<Mat> lu(ginv);
            if (!lu.isInvertible())
              throw NumericError("slice not transversal: induced metric singular");
            Mat g = lu.inverse();
            return g(i, j);
          },
          m);
    }
  geometry::ChartedMetric base(m, comp);

  // Connection forms: ω_i is the dual covector of X_i in the combined
  // frame; dω_i by finite differences of its chart components; the
  // reduced two-form evaluates dω_i on horizontal lifts.
  auto omega_components = [Sp](int i, const Vec& q) {
    Mat A(Sp->n, Sp->n);
    for (int a = 0; a < Sp->base_dim(); ++a) A.col(a) = Sp->frame[a](q);
    for (int a = 0; a < Sp->s; ++a) A.col(Sp->base_dim() + a) = Sp->symmetries[a](q);
    // ω_i(e_k): solve Aᵀ w = unit(base_dim + i) ... row vector of the
    // inverse: ω = (A^{-1}) row (base_dim + i).
    Eigen::FullPivLU<Mat> lu(A);
    if (!lu.isInvertible())
      throw NumericError("combined frame degenerate while building ω");
    Mat Ainv = lu.inverse();
    return Vec(Ainv.row(Sp->base_dim() + i).transpose());
  };

  std::vector<std::vector<FieldPtr>> two_forms(S.s);
  for (int i = 0; i < S.s; ++i) {
    for (int j = 0; j < m; ++j)
      for (int k = j + 1; k < m; ++k) {
        two_forms[i].push_back(numeric_field(
            [Sp, omega_components, horizontal, i, j, k](const Vec& qbase) {
              const int m = Sp->base_dim();
              Vec q(Sp->n);
              q.head(m) = qbase;
              q.tail(Sp->s) = Sp->slice_z;
              // dω(U,V) = U(ω(V)) − V(ω(U)) − ω([U,V]) reduces for
              // coordinate fields to ∂_a ω_b − ∂_b ω_a; contract with
              // horizontal lifts of ∂_j, ∂_k of the base chart.
              auto [cj, hj] = horizontal(qbase, Vec::Unit(m, j));
              auto [ck, hk] = horizontal(qbase, Vec::Unit(m, k));
              double acc = 0.0;
              for (int a = 0; a < Sp->n; ++a) {
                double h = kLieStep * std::max(1.0, std::abs(q[a]));
                Vec qp = q, qm = q;
                qp[a] += h;
                qm[a] -= h;
                Vec dwa = (omega_components(i, qp) - omega_components(i, qm)) /
                          (2.0 * h);
                // ∂_a ω_b contributes U^a V^b − V^a U^b
                for (int b = 0; b < Sp->n; ++b)
                  acc += dwa[b] * (hj[a] * hk[b] - hk[a] * hj[b]);
              }
              return acc;
            },
            m));
      }
  }
  geometry::MagneticTensor magnetic(m, S.s, std::move(two_forms), c);

  // W descends: evaluate on the slice.
  FieldPtr Wred = numeric_field(
      [Sp](const Vec& qbase) {
        Vec q(Sp->n);
        q.head(Sp->base_dim()) = qbase;
        q.tail(Sp->s) = Sp->slice_z;
        return Sp->potential->value(q);
      },
      m);

  ReducedSystem out;
  out.base = std::move(base);
  out.magnetic = std::move(magnetic);
  out.potential = Wred;
  out.c0 = c0;
  out.name = S.name.empty() ? "reduced" : S.name + "_reduced";
  return out;
}

}  // namespace srcurv
