#include "srcurv/geometry.hpp"

#include <cmath>

namespace srcurv {

namespace {

double fd_step1(double x) { return 5e-6 * std::max(1.0, std::abs(x)); }
double fd_step2(double x) { return 1e-4 * std::max(1.0, std::abs(x)); }

}  // namespace

double ScalarFieldBase::d1(int i, const Vec& q) const {
  double h = fd_step1(q[i]);
  Vec qp = q, qm = q;
  qp[i] += h;
  qm[i] -= h;
  return (value(qp) - value(qm)) / (2.0 * h);
}

double ScalarFieldBase::d2(int i, int j, const Vec& q) const {
  if (i == j) {
    double h = fd_step2(q[i]);
    Vec qp = q, qm = q;
    qp[i] += h;
    qm[i] -= h;
    return (value(qp) - 2.0 * value(q) + value(qm)) / (h * h);
  }
  double hi = fd_step2(q[i]), hj = fd_step2(q[j]);
  Vec qpp = q, qpm = q, qmp = q, qmm = q;
  qpp[i] += hi; qpp[j] += hj;
  qpm[i] += hi; qpm[j] -= hj;
  qmp[i] -= hi; qmp[j] += hj;
  qmm[i] -= hi; qmm[j] -= hj;
  return (value(qpp) - value(qpm) - value(qmp) + value(qmm)) / (4.0 * hi * hj);
}

double ScalarFieldBase::d3(int i, int j, int k, const Vec& q) const {
  double h = fd_step2(q[k]);
  auto central = [&](double step) {
    Vec qp = q, qm = q;
    qp[k] += step;
    qm[k] -= step;
    return (d2(i, j, qp) - d2(i, j, qm)) / (2.0 * step);
  };
  double full = central(h);
  double half = central(h / 2.0);
  return (4.0 * half - full) / 3.0;
}

}  // namespace srcurv

namespace srcurv::geometry {

ChartedMetric::ChartedMetric(int dim, std::vector<FieldPtr> components)
    : dim_(dim), comp_(std::move(components)) {
  if ((int)comp_.size() != dim_ * dim_)
    throw InputError("metric needs dim*dim component fields");
}

ChartedMetric ChartedMetric::conformal(int dim, const FieldPtr& phi) {
  std::vector<FieldPtr> comp(dim * dim);
  auto zero = constant_field(0.0, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      if (i == j) {
        comp[i * dim + j] = numeric_field(
            [phi](const Vec& q) { return std::exp(2.0 * phi->value(q)); }, dim);
      } else {
        comp[i * dim + j] = zero;
      }
    }
  ChartedMetric M(dim, comp);
  // Keep exact derivatives: g_ii = e^{2φ}, ∂g = 2 e^{2φ} ∂φ, etc.
  struct DiagField final : public ScalarFieldBase {
    FieldPtr phi;
    int d;
    DiagField(FieldPtr p, int dd) : phi(std::move(p)), d(dd) {}
    int dim() const override { return d; }
    double value(const Vec& q) const override {
      return std::exp(2.0 * phi->value(q));
    }
    double d1(int i, const Vec& q) const override {
      return 2.0 * phi->d1(i, q) * value(q);
    }
    double d2(int i, int j, const Vec& q) const override {
      return (2.0 * phi->d2(i, j, q) +
              4.0 * phi->d1(i, q) * phi->d1(j, q)) * value(q);
    }
    double d3(int i, int j, int k, const Vec& q) const override {
      double e = value(q);
      double pi = phi->d1(i, q), pj = phi->d1(j, q), pk = phi->d1(k, q);
      return e * (2.0 * phi->d3(i, j, k, q) + 4.0 * phi->d2(i, j, q) * pk +
                  4.0 * phi->d2(i, k, q) * pj + 4.0 * phi->d2(j, k, q) * pi +
                  8.0 * pi * pj * pk);
    }
  };
  std::vector<FieldPtr> exact(dim * dim, zero);
  for (int i = 0; i < dim; ++i)
    exact[i * dim + i] = std::make_shared<DiagField>(phi, dim);
  ChartedMetric out(dim, exact);

  // Closed-form Christoffels of a conformal metric:
  //   Γ^k_{ij} = δ_ik ∂_j φ + δ_jk ∂_i φ − δ_ij ∂_k φ
  out.closed_christoffel = [phi, dim](const Vec& q) {
    Vec dphi(dim);
    for (int i = 0; i < dim; ++i) dphi[i] = phi->d1(i, q);
    Christoffel gamma(dim, Mat::Zero(dim, dim));
    for (int k = 0; k < dim; ++k)
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
          double v = 0.0;
          if (i == k) v += dphi[j];
          if (j == k) v += dphi[i];
          if (i == j) v -= dphi[k];
          gamma[k](i, j) = v;
        }
    return gamma;
  };
  if (dim == 2) {
    // Gaussian curvature K = −e^{−2φ} Δφ for surfaces.
    out.closed_sectional = [phi](const Vec& q, const Vec&, const Vec&) {
      double lap = phi->d2(0, 0, q) + phi->d2(1, 1, q);
      return -std::exp(-2.0 * phi->value(q)) * lap;
    };
  }
  return out;
}

Mat ChartedMetric::metric(const Vec& q) const {
  Mat g(dim_, dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = i; j < dim_; ++j) {
      double v = comp_[i * dim_ + j]->value(q);
      g(i, j) = v;
      g(j, i) = v;
    }
  return g;
}

Mat ChartedMetric::metric_inv(const Vec& q) const {
  Mat g = metric(q);
  Eigen::LDLT<Mat> ldlt(g);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw NumericError("metric not positive definite at evaluation point");
  return ldlt.solve(Mat::Identity(dim_, dim_));
}

MetricJet ChartedMetric::jet(const Vec& q, int order) const {
  MetricJet out;
  out.g = metric(q);
  Eigen::LDLT<Mat> ldlt(out.g);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw NumericError("metric not positive definite at evaluation point");
  out.g_inv = ldlt.solve(Mat::Identity(dim_, dim_));
  if (order >= 1) {
    out.dg.assign(dim_, Mat(dim_, dim_));
    for (int k = 0; k < dim_; ++k)
      for (int i = 0; i < dim_; ++i)
        for (int j = i; j < dim_; ++j) {
          double v = comp_[i * dim_ + j]->d1(k, q);
          out.dg[k](i, j) = v;
          out.dg[k](j, i) = v;
        }
  }
  if (order >= 2) {
    out.ddg.assign(dim_, std::vector<Mat>(dim_, Mat(dim_, dim_)));
    for (int k = 0; k < dim_; ++k)
      for (int l = k; l < dim_; ++l) {
        Mat m(dim_, dim_);
        for (int i = 0; i < dim_; ++i)
          for (int j = i; j < dim_; ++j) {
            double v = comp_[i * dim_ + j]->d2(k, l, q);
            m(i, j) = v;
            m(j, i) = v;
          }
        out.ddg[k][l] = m;
        out.ddg[l][k] = m;
      }
  }
  return out;
}

MagneticTensor::MagneticTensor(int dim, int s,
                               std::vector<std::vector<FieldPtr>> upper,
                               Vec levels)
    : dim_(dim), s_(s), comp_(std::move(upper)), c_(std::move(levels)) {
  if ((int)comp_.size() != s_ || c_.size() != s_)
    throw InputError("magnetic tensor: need one component set and one level per symmetry");
  const int nupper = dim_ * (dim_ - 1) / 2;
  for (auto& cs : comp_)
    if ((int)cs.size() != nupper)
      throw InputError("magnetic tensor: wrong number of two-form components");
}

MagneticTensor MagneticTensor::surface(const ChartedMetric& M,
                                       const FieldPtr& b, double level) {
  if (M.dim() != 2)
    throw InputError("scalar magnetic intensity requires a surface chart");
  // dω = b(q) · area form:  Ω_12 = b √det g.
  struct AreaField final : public ScalarFieldBase {
    FieldPtr b;
    const ChartedMetric* M;
    ChartedMetric keep;
    AreaField(FieldPtr bb, const ChartedMetric& mm) : b(std::move(bb)), keep(mm) {
      M = &keep;
    }
    int dim() const override { return 2; }
    double value(const Vec& q) const override {
      Mat g = M->metric(q);
      return b->value(q) * std::sqrt(g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0));
    }
    double d1(int i, const Vec& q) const override {
      MetricJet j = M->jet(q, 1);
      double det = j.g(0, 0) * j.g(1, 1) - j.g(0, 1) * j.g(1, 0);
      double sq = std::sqrt(det);
      double ddet = j.dg[i](0, 0) * j.g(1, 1) + j.g(0, 0) * j.dg[i](1, 1) -
                    2.0 * j.g(0, 1) * j.dg[i](0, 1);
      return b->d1(i, q) * sq + b->value(q) * 0.5 * ddet / sq;
    }
  };
  std::vector<std::vector<FieldPtr>> comp(1);
  comp[0].push_back(std::make_shared<AreaField>(b, M));
  Vec c(1);
  c[0] = level;
  return MagneticTensor(2, 1, std::move(comp), std::move(c));
}

Mat MagneticTensor::two_form(int i, const Vec& q) const {
  Mat omega = Mat::Zero(dim_, dim_);
  int idx = 0;
  for (int j = 0; j < dim_; ++j)
    for (int k = j + 1; k < dim_; ++k) {
      double v = comp_[i][idx++]->value(q);
      omega(j, k) = v;
      omega(k, j) = -v;
    }
  return omega;
}

Mat MagneticTensor::combined(const Vec& q) const {
  Mat omega = Mat::Zero(dim_, dim_);
  for (int i = 0; i < s_; ++i)
    if (c_[i] != 0.0) omega += c_[i] * two_form(i, q);
  return omega;
}

std::vector<Mat> MagneticTensor::combined_d1(const Vec& q) const {
  std::vector<Mat> out(dim_, Mat::Zero(dim_, dim_));
  for (int i = 0; i < s_; ++i) {
    if (c_[i] == 0.0) continue;
    int idx = 0;
    for (int j = 0; j < dim_; ++j)
      for (int k = j + 1; k < dim_; ++k) {
        const auto& f = comp_[i][idx++];
        for (int l = 0; l < dim_; ++l) {
          double v = c_[i] * f->d1(l, q);
          out[l](j, k) += v;
          out[l](k, j) -= v;
        }
      }
  }
  return out;
}

Mat MagneticTensor::tensor(int i, const ChartedMetric& M, const Vec& q) const {
  // g(J v, w) = Ω(v, w)  ⇒  J^a_b = g^{ac} Ω_{bc}
  return M.metric_inv(q) * two_form(i, q).transpose();
}

Mat MagneticTensor::tensor_combined(const ChartedMetric& M, const Vec& q) const {
  if (s_ == 0) return Mat::Zero(M.dim(), M.dim());
  return M.metric_inv(q) * combined(q).transpose();
}

MagneticTensor MagneticTensor::with_levels(const Vec& c) const {
  MagneticTensor out = *this;
  if (c.size() != s_) throw InputError("level vector size mismatch");
  out.c_ = c;
  return out;
}

Christoffel christoffel(const ChartedMetric& M, const Vec& q) {
  const int d = M.dim();
  MetricJet jet = M.jet(q, 1);
  Christoffel gamma(d, Mat(d, d));
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        double s = 0.0;
        for (int l = 0; l < d; ++l) {
          double first =
              0.5 * (jet.dg[i](l, j) + jet.dg[j](l, i) - jet.dg[l](i, j));
          s += jet.g_inv(k, l) * first;
        }
        gamma[k](i, j) = s;
        gamma[k](j, i) = s;
      }
  return gamma;
}

std::vector<Christoffel> christoffel_d1(const ChartedMetric& M, const Vec& q) {
  const int d = M.dim();
  MetricJet jet = M.jet(q, 2);
  // ∂_m g^{kl} = −g^{ka} ∂_m g_ab g^{bl}
  std::vector<Mat> dginv(d);
  for (int m = 0; m < d; ++m) dginv[m] = -jet.g_inv * jet.dg[m] * jet.g_inv;

  std::vector<Christoffel> out(d, Christoffel(d, Mat::Zero(d, d)));
  for (int m = 0; m < d; ++m)
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
          double s = 0.0;
          for (int l = 0; l < d; ++l) {
            double first =
                0.5 * (jet.dg[i](l, j) + jet.dg[j](l, i) - jet.dg[l](i, j));
            double dfirst = 0.5 * (jet.ddg[m][i](l, j) + jet.ddg[m][j](l, i) -
                                   jet.ddg[m][l](i, j));
            s += dginv[m](k, l) * first + jet.g_inv(k, l) * dfirst;
          }
          out[m][k](i, j) = s;
          out[m][k](j, i) = s;
        }
  return out;
}

CurvatureTensor riemann(const ChartedMetric& M, const Vec& q) {
  const int d = M.dim();
  Christoffel gamma = christoffel(M, q);
  std::vector<Christoffel> dgamma = christoffel_d1(M, q);

  CurvatureTensor R;
  R.dim = d;
  R.c.assign((std::size_t)d * d * d * d, 0.0);
  // Oriented so that sec(u,v) = g(R(u,v)u,v)/gram > 0 on the round sphere:
  // component l of R(e_i,e_j)e_k =
  //   ∂_j Γ^l_{ik} − ∂_i Γ^l_{jk} + Γ^l_{jm} Γ^m_{ik} − Γ^l_{im} Γ^m_{jk}
  for (int l = 0; l < d; ++l)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
          double v = dgamma[j][l](i, k) - dgamma[i][l](j, k);
          for (int m = 0; m < d; ++m)
            v += gamma[l](j, m) * gamma[m](i, k) -
                 gamma[l](i, m) * gamma[m](j, k);
          R.at(l, i, j, k) = v;
        }
  return R;
}

double curvature_quad(const ChartedMetric& M, const CurvatureTensor& R,
                      const Vec& q, const Vec& u, const Vec& v, const Vec& w,
                      const Vec& z) {
  const int d = M.dim();
  Mat g = M.metric(q);
  Vec Rw = Vec::Zero(d);
  for (int l = 0; l < d; ++l) {
    double s = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          s += R(l, i, j, k) * u[i] * v[j] * w[k];
    Rw[l] = s;
  }
  return z.dot(g * Rw);
}

double sectional(const ChartedMetric& M, const Vec& q, const Vec& u,
                 const Vec& v) {
  Mat g = M.metric(q);
  double uu = u.dot(g * u), vv = v.dot(g * v), uv = u.dot(g * v);
  double gram = uu * vv - uv * uv;
  if (gram < 1e-12 * std::max(1.0, uu * vv))
    throw NumericError("degenerate 2-plane in sectional curvature");
  CurvatureTensor R = riemann(M, q);
  return curvature_quad(M, R, q, u, v, u, v) / gram;
}

GradHess grad_hess(const ChartedMetric& M, const ScalarFieldBase& W,
                   const Vec& q) {
  const int d = M.dim();
  Vec dW(d);
  for (int i = 0; i < d; ++i) dW[i] = W.d1(i, q);
  Mat ddW(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      double v = W.d2(i, j, q);
      ddW(i, j) = v;
      ddW(j, i) = v;
    }
  Christoffel gamma = christoffel(M, q);
  GradHess out;
  out.grad = M.metric_inv(q) * dW;
  out.hess = ddW;
  for (int k = 0; k < d; ++k) out.hess -= gamma[k] * dW[k];
  return out;
}

Vec nabla_J(const ChartedMetric& M, const MagneticTensor& J, const Vec& q,
            const Vec& a, const Vec& b) {
  const int d = M.dim();
  if (J.trivial()) return Vec::Zero(d);
  MetricJet jet = M.jet(q, 1);
  Mat omega = J.combined(q);
  std::vector<Mat> domega = J.combined_d1(q);
  Mat Jc = jet.g_inv * omega.transpose();

  // ∂_m J = ∂_m(g^{-1}) Ωᵀ + g^{-1} ∂_m Ωᵀ
  Christoffel gamma = christoffel(M, q);
  Mat dJ_a = Mat::Zero(d, d);
  for (int m = 0; m < d; ++m) {
    Mat dginv = -jet.g_inv * jet.dg[m] * jet.g_inv;
    dJ_a += a[m] * (dginv * omega.transpose() + jet.g_inv * domega[m].transpose());
  }
  // (∇_a J)^k_j = a^m ∂_m J^k_j + Γ^k_{ml} a^m J^l_j − Γ^l_{mj} a^m J^k_l
  Mat cov = dJ_a;
  for (int k = 0; k < d; ++k)
    for (int j = 0; j < d; ++j) {
      double corr = 0.0;
      for (int m = 0; m < d; ++m)
        for (int l = 0; l < d; ++l)
          corr += a[m] * (gamma[k](m, l) * Jc(l, j) - gamma[l](m, j) * Jc(k, l));
      cov(k, j) += corr;
    }
  return cov * b;
}

Mat orthonormal_frame(const ChartedMetric& M, const Vec& q) {
  Mat g = M.metric(q);
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success)
    throw NumericError("metric not positive definite at evaluation point");
  Mat L = llt.matrixL();
  // Columns of L^{-T} are g-orthonormal.
  return L.transpose().triangularView<Eigen::Upper>().solve(
      Mat::Identity(M.dim(), M.dim()));
}

Mat orthonormal_complement(const ChartedMetric& M, const Vec& q,
                           const Vec& w) {
  const int d = M.dim();
  Mat g = M.metric(q);
  Mat frame = orthonormal_frame(M, q);
  // Gram-Schmidt of the frame against w, keeping the d-1 most independent.
  std::vector<Vec> basis;
  Vec wn = w / std::sqrt(w.dot(g * w));
  basis.push_back(wn);
  for (int c = 0; c < d && (int)basis.size() < d; ++c) {
    Vec cand = frame.col(c);
    for (const Vec& e : basis) cand -= e.dot(g * cand) * e;
    double n2 = cand.dot(g * cand);
    if (n2 > 1e-16) basis.push_back(cand / std::sqrt(n2));
  }
  if ((int)basis.size() != d)
    throw NumericError("failed to complete orthonormal frame");
  Mat out(d, d - 1);
  for (int c = 1; c < d; ++c) out.col(c - 1) = basis[c];
  return out;
}

KmaxReport k_max(const ChartedMetric& M, const Region& region, int grid_q,
                 int grid_plane) {
  const int d = M.dim();
  if (grid_q < 1) throw InputError("empty k_max grid");
  KmaxReport best;
  best.k_max = -std::numeric_limits<double>::infinity();
  best.grid = grid_q;

  auto plane_max = [&](const Vec& q) {
    Mat frame = orthonormal_frame(M, q);
    double m = -std::numeric_limits<double>::infinity();
    if (d == 2) {
      return sectional(M, q, frame.col(0), frame.col(1));
    }
    for (int a = 0; a < d; ++a)
      for (int b = a + 1; b < d; ++b)
        m = std::max(m, sectional(M, q, frame.col(a), frame.col(b)));
    // Mixed planes on a coarse angle grid.
    for (int a = 0; a < d; ++a)
      for (int b = a + 1; b < d; ++b)
        for (int c = 0; c < d; ++c) {
          if (c == a || c == b) continue;
          for (int t = 1; t < grid_plane; ++t) {
            double th = M_PI * t / grid_plane;
            Vec u = frame.col(a);
            Vec v = std::cos(th) * frame.col(b) + std::sin(th) * frame.col(c);
            m = std::max(m, sectional(M, q, u, v));
          }
        }
    return m;
  };

  Vec q(d);
  std::vector<int> idx(d, 0);
  for (;;) {
    for (int i = 0; i < d; ++i) {
      double t = grid_q == 1 ? 0.5 : (double)idx[i] / (grid_q - 1);
      q[i] = region.lo[i] + t * (region.hi[i] - region.lo[i]);
    }
    if (M.in_domain(q)) {
      double v = plane_max(q);
      if (v > best.k_max) {
        best.k_max = v;
        best.argmax_q = q;
      }
    }
    int i = 0;
    while (i < d && ++idx[i] == grid_q) idx[i++] = 0;
    if (i == d) break;
  }

  // Local ascent refinement over q at the incumbent.
  Vec qc = best.argmax_q;
  double step = 0.0;
  for (int i = 0; i < d; ++i)
    step = std::max(step, (region.hi[i] - region.lo[i]) / std::max(1, grid_q - 1));
  for (int it = 0; it < 20 && step > 1e-9; ++it) {
    bool improved = false;
    for (int i = 0; i < d; ++i)
      for (double s : {-step, step}) {
        Vec qt = qc;
        qt[i] = std::clamp(qt[i] + s, region.lo[i], region.hi[i]);
        if (!M.in_domain(qt)) continue;
        double v = plane_max(qt);
        if (v > best.k_max) {
          best.k_max = v;
          best.argmax_q = qt;
          qc = qt;
          improved = true;
        }
      }
    if (!improved) step *= 0.5;
  }
  return best;
}

}  // namespace srcurv::geometry
