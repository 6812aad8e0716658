#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "srcurv/geometry.hpp"

using namespace srcurv;
using namespace srcurv::geometry;

namespace {

Vec pt(std::initializer_list<double> v) {
  Vec q(v.size());
  int i = 0;
  for (double x : v) q[i++] = x;
  return q;
}

ChartedMetric flat(int dim) {
  return ChartedMetric::conformal(dim, constant_field(0.0, dim));
}

ChartedMetric upper_half_plane() {
  auto M = ChartedMetric::conformal(2, expr_field("-log(q2)", 2));
  M.domain = [](const Vec& q) { return q[1] > 1e-9; };
  return M;
}

ChartedMetric stereographic_sphere() {
  return ChartedMetric::conformal(2, expr_field("log(2) - log(1+q1^2+q2^2)", 2));
}

}  // namespace

TEST_CASE("christoffel: flat space vanishes") {
  auto M = flat(2);
  Christoffel g = christoffel(M, pt({0.3, -1.2}));
  for (const Mat& gk : g) CHECK(gk.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("christoffel: upper half-plane closed values") {
  auto M = upper_half_plane();
  Christoffel g = christoffel(M, pt({0.0, 1.0}));
  CHECK(g[0](0, 1) == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(g[1](0, 0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(g[1](1, 1) == doctest::Approx(-1.0).epsilon(1e-9));
  // symmetry in the lower indices
  for (const Mat& gk : g)
    CHECK((gk - gk.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("christoffel: conformal factor 0.1*q1 at origin") {
  auto M = ChartedMetric::conformal(2, expr_field("0.1*q1", 2));
  Christoffel g = christoffel(M, pt({0.0, 0.0}));
  CHECK(g[0](0, 0) == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("closed-form christoffels match the component pipeline") {
  auto M = ChartedMetric::conformal(
      2, expr_field("0.1*(cos(q1)+cos(q2))", 2));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  for (int k = 0; k < 10; ++k) {
    Vec q = pt({uni(rng), uni(rng)});
    Christoffel a = christoffel(M, q);
    Christoffel b = M.closed_christoffel(q);
    for (int i = 0; i < 2; ++i)
      CHECK((a[i] - b[i]).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("metric compatibility by finite differences") {
  auto M = ChartedMetric::conformal(2, expr_field("0.2*sin(q1)*cos(q2)", 2));
  Vec q = pt({0.4, -0.3});
  Christoffel gam = christoffel(M, q);
  // ∇_k g_ij = ∂_k g_ij − Γ^l_{ki} g_lj − Γ^l_{kj} g_il = 0
  MetricJet jet = M.jet(q, 1);
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double v = jet.dg[k](i, j);
        for (int l = 0; l < 2; ++l)
          v -= gam[l](k, i) * jet.g(l, j) + gam[l](k, j) * jet.g(i, l);
        CHECK(std::abs(v) < 1e-6);
      }
}

TEST_CASE("sectional curvature of the constant-curvature models") {
  auto Mf = flat(2);
  CHECK(std::abs(sectional(Mf, pt({0.1, 0.2}), pt({1.0, 0.0}), pt({0.0, 1.0}))) <
        1e-9);

  auto Mh = upper_half_plane();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> uni(0.3, 2.0);
  for (int k = 0; k < 5; ++k) {
    Vec q = pt({uni(rng) - 1.0, uni(rng)});
    Vec u = pt({uni(rng), uni(rng)});
    Vec v = pt({-uni(rng), uni(rng)});
    CHECK(sectional(Mh, q, u, v) == doctest::Approx(-1.0).epsilon(1e-6));
  }

  auto Ms = stereographic_sphere();
  for (int k = 0; k < 5; ++k) {
    Vec q = pt({uni(rng) - 1.0, uni(rng) - 1.0});
    CHECK(sectional(Ms, q, pt({1.0, 0.3}), pt({0.2, 1.0})) ==
          doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("degenerate plane is rejected") {
  auto M = flat(2);
  CHECK_THROWS_AS(sectional(M, pt({0, 0}), pt({1.0, 1.0}), pt({2.0, 2.0})),
                  NumericError);
}

TEST_CASE("first Bianchi identity at random points") {
  auto M = ChartedMetric::conformal(2, expr_field("0.1*(cos(q1)+cos(q2))", 2));
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  for (int trial = 0; trial < 5; ++trial) {
    Vec q = pt({uni(rng), uni(rng)});
    CurvatureTensor R = riemann(M, q);
    for (int l = 0; l < 2; ++l)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          for (int k = 0; k < 2; ++k) {
            double s = R(l, i, j, k) + R(l, j, k, i) + R(l, k, i, j);
            CHECK(std::abs(s) < 1e-6);
          }
  }
}

TEST_CASE("gradient and covariant Hessian") {
  auto Mf = flat(2);
  auto W = expr_field("0.5*(q1^2+q2^2)", 2);
  GradHess gh = grad_hess(Mf, *W, pt({0.7, -0.4}));
  CHECK(gh.grad[0] == doctest::Approx(0.7).epsilon(1e-10));
  CHECK(gh.grad[1] == doctest::Approx(-0.4).epsilon(1e-10));
  CHECK((gh.hess - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);

  auto Wc = constant_field(3.0, 2);
  GradHess ghc = grad_hess(Mf, *Wc, pt({1.0, 2.0}));
  CHECK(ghc.grad.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(ghc.hess.cwiseAbs().maxCoeff() < 1e-12);

  // upper half-plane, W = q2 at (0,1): ∇W = g^{-1} (0,1) = (0,1);
  // covariant Hessian against a finite-difference oracle
  auto Mh = upper_half_plane();
  auto Wy = expr_field("q2", 2);
  Vec q = pt({0.0, 1.0});
  GradHess ghh = grad_hess(Mh, *Wy, q);
  CHECK(ghh.grad[0] == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(ghh.grad[1] == doctest::Approx(1.0).epsilon(1e-10));
  // oracle: Hess W(u,u) = d²/dt² W(γ(t)) along the geodesic with γ'(0)=u;
  // for the half-plane geodesics have closed form, use the Christoffel
  // correction directly as an independent small computation instead.
  Christoffel gam = christoffel(Mh, q);
  Mat expect = Mat::Zero(2, 2);
  expect(0, 0) -= gam[1](0, 0) * 1.0;  // −Γ^2_{ij} ∂_2 W
  expect(0, 1) -= gam[1](0, 1);
  expect(1, 0) -= gam[1](1, 0);
  expect(1, 1) -= gam[1](1, 1);
  CHECK((ghh.hess - expect).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("magnetic tensor: skew-adjointness and two-form consistency") {
  auto M = ChartedMetric::conformal(2, expr_field("0.1*cos(q1)", 2));
  auto b = expr_field("0.3*(1 + 0.2*cos(q2))", 2);
  MagneticTensor J = MagneticTensor::surface(M, b, 0.7);
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  for (int k = 0; k < 20; ++k) {
    Vec q = pt({uni(rng), uni(rng)});
    Mat g = M.metric(q);
    Mat Jc = J.tensor_combined(M, q);
    Mat omega = J.combined(q);
    Vec u = pt({uni(rng), uni(rng)}), v = pt({uni(rng), uni(rng)});
    // g(J u, v) = Ω(u, v)
    CHECK(std::abs((Jc * u).dot(g * v) - u.dot(omega * v)) < 1e-10);
    // skew-adjointness
    CHECK(std::abs((Jc * u).dot(g * v) + u.dot(g * (Jc * v))) < 1e-10);
  }
}

TEST_CASE("covariant derivative of the magnetic tensor") {
  // constant field on flat space: ∇J = 0
  auto Mf = flat(2);
  MagneticTensor Jconst = MagneticTensor::surface(Mf, constant_field(1.0, 2), 1.0);
  Vec z = nabla_J(Mf, Jconst, pt({0.2, 0.5}), pt({1.0, 0.0}), pt({0.0, 1.0}));
  CHECK(z.cwiseAbs().maxCoeff() < 1e-10);

  // flat, b = q1: (∇_{e1} J)(v) = rot v
  MagneticTensor Jlin = MagneticTensor::surface(Mf, expr_field("q1", 2), 1.0);
  Vec e1 = pt({1.0, 0.0}), e2 = pt({0.0, 1.0});
  Vec r1 = nabla_J(Mf, Jlin, pt({0.4, -0.1}), e1, e1);
  CHECK(r1[0] == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(r1[1] == doctest::Approx(1.0).epsilon(1e-8));  // rot e1 = e2
  Vec r2 = nabla_J(Mf, Jlin, pt({0.4, -0.1}), e1, e2);
  CHECK(r2[0] == doctest::Approx(-1.0).epsilon(1e-8));  // rot e2 = −e1
  CHECK(r2[1] == doctest::Approx(0.0).epsilon(1e-8));
  // derivative along e2 vanishes (b independent of q2)
  Vec r3 = nabla_J(Mf, Jlin, pt({0.4, -0.1}), e2, e1);
  CHECK(r3.cwiseAbs().maxCoeff() < 1e-8);

  // rotation by π/2 is parallel: ∇J = 0 on the upper half-plane with b = 1
  auto Mh = upper_half_plane();
  MagneticTensor Jrot = MagneticTensor::surface(Mh, constant_field(1.0, 2), 1.0);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> uni(0.4, 2.0);
  for (int k = 0; k < 5; ++k) {
    Vec q = pt({uni(rng) - 1.0, uni(rng)});
    Vec u = pt({uni(rng), uni(rng)});
    Vec w = pt({uni(rng), -uni(rng)});
    CHECK(nabla_J(Mh, Jrot, q, u, w).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("k_max on the three constant-curvature models") {
  Region box{pt({-1.0, 0.5}), pt({1.0, 2.0})};
  auto Mh = upper_half_plane();
  CHECK(k_max(Mh, box, 7).k_max == doctest::Approx(-1.0).epsilon(1e-4));

  Region torus{pt({0.0, 0.0}), pt({2 * M_PI, 2 * M_PI})};
  CHECK(std::abs(k_max(flat(2), torus, 5).k_max) < 1e-9);

  Region sq{pt({-1.2, -1.2}), pt({1.2, 1.2})};
  CHECK(k_max(stereographic_sphere(), sq, 7).k_max ==
        doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("k_max rejects empty grids") {
  Region box{pt({0.0, 0.0}), pt({1.0, 1.0})};
  CHECK_THROWS_AS(k_max(flat(2), box, 0), InputError);
}

TEST_CASE("orthonormal frames and complements") {
  auto Mh = upper_half_plane();
  Vec q = pt({0.3, 1.7});
  Mat g = Mh.metric(q);
  Mat F = orthonormal_frame(Mh, q);
  CHECK((F.transpose() * g * F - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() <
        1e-12);
  Vec w = F.col(0);
  Mat comp = orthonormal_complement(Mh, q, w);
  CHECK(comp.cols() == 1);
  CHECK(std::abs(w.dot(g * comp.col(0))) < 1e-12);
  CHECK(comp.col(0).dot(g * comp.col(0)) == doctest::Approx(1.0).epsilon(1e-12));
}
