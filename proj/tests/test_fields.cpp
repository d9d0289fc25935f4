#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "concentra/fields.hpp"

using namespace concentra;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

PotentialField const_V(int N, double v) {
  FieldSpec s{"constant", {{"value", {v}}}};
  return make_potential(s, N);
}

DiffusionField identity_J(int N) {
  return make_diffusion({"identity", {}}, N);
}

}  // namespace

TEST_CASE("gamma is one for unit fields") {
  for (int N : {1, 2, 3}) {
    PotentialField V = const_V(N, 1.0);
    DiffusionField J = identity_J(N);
    LandscapeSample s = gamma_eval(Vec::Zero(N), V, J, N, 2.0);
    CHECK(s.gamma == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s.grad.norm() == doctest::Approx(0.0).epsilon(1e-14));
  }
}

TEST_CASE("gamma exponent arithmetic, N=3 p=3") {
  // exponent (p+1)/(p-1) - N/2 = 0.5, so V = 4 gives Gamma = 2
  CHECK(gamma_exponent(3, 3.0) == doctest::Approx(0.5));
  PotentialField V = const_V(3, 4.0);
  DiffusionField J = identity_J(3);
  LandscapeSample s = gamma_eval(Vec::Zero(3), V, J, 3, 3.0);
  CHECK(s.gamma == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("gamma determinant factor, diag(4,1,1)") {
  PotentialField V = const_V(3, 1.0);
  DiffusionField J = make_diffusion({"diag_const", {{"diag", {4, 1, 1}}}}, 3);
  LandscapeSample s = gamma_eval(Vec::Zero(3), V, J, 3, 3.0);
  CHECK(s.gamma == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("gamma rejects invalid coefficient data") {
  PotentialField V = const_V(2, 1.0);
  V.value = [](const Vec&) { return -1.0; };
  DiffusionField J = identity_J(2);
  CHECK_THROWS_AS(gamma_eval(Vec::Zero(2), V, J, 2, 3.0), DomainError);

  PotentialField V2 = const_V(2, 1.0);
  DiffusionField Jneg = identity_J(2);
  Jneg.value = [](const Vec&) {
    Mat m(2, 2);
    m << 1, 2, 2, 1;  // symmetric but indefinite
    return m;
  };
  CHECK_THROWS_AS(gamma_eval(Vec::Zero(2), V2, Jneg, 2, 3.0), DomainError);
}

TEST_CASE("gamma gradient matches centered differences at second order") {
  const int N = 2;
  const double p = 3.0;
  FieldSpec vs{"quadratic_well", {{"c", {0.3}}, {"center", {0.4, -0.2}}}};
  PotentialField V = make_potential(vs, N);
  Box box;
  box.lo = vec2(-3, -3);
  box.hi = vec2(3, 3);
  DiffusionField J = make_diffusion(
      {"diag_quad", {{"a", {1, 1}}, {"b", {0.25, 0}}, {"axis", {1, 1}}}}, N,
      box);
  Vec z = vec2(0.7, -0.9);
  Vec g = gamma_eval(z, V, J, N, p).grad;

  auto gamma_at = [&](const Vec& q) { return gamma_eval(q, V, J, N, p).gamma; };
  double prev_err = 0.0;
  int checked = 0;
  for (double h : {1e-2, 5e-3, 2.5e-3}) {
    Vec fd(N);
    for (int a = 0; a < N; ++a) {
      Vec zp = z, zm = z;
      zp(a) += h;
      zm(a) -= h;
      fd(a) = (gamma_at(zp) - gamma_at(zm)) / (2 * h);
    }
    double err = (fd - g).norm();
    if (checked > 0) {
      double order = std::log2(prev_err / err);
      CHECK(order > 1.8);
    }
    prev_err = err;
    ++checked;
  }
}

TEST_CASE("gamma scaling covariance under J -> c J") {
  const int N = 3;
  const double p = 2.5, c = 2.3;
  PotentialField V = const_V(N, 1.7);
  Mat Jm(N, N);
  Jm << 2, 0.3, 0, 0.3, 1.5, 0.1, 0, 0.1, 1.2;
  DiffusionField J;
  J.value = [Jm](const Vec&) { return Jm; };
  J.deriv = [N](const Vec&, int) { return Mat(Mat::Zero(N, N)); };
  J.nu = 1.0;
  DiffusionField Jc;
  Jc.value = [Jm, c](const Vec&) { return Mat(c * Jm); };
  Jc.deriv = J.deriv;
  Jc.nu = c;

  double g1 = gamma_eval(Vec::Zero(N), V, J, N, p).gamma;
  double g2 = gamma_eval(Vec::Zero(N), V, Jc, N, p).gamma;
  CHECK(g2 / g1 == doctest::Approx(std::pow(c, N / 2.0)).epsilon(1e-12));

  Transform t1 = diagonalizing_transform(Jm);
  Transform t2 = diagonalizing_transform(Mat(c * Jm));
  CHECK((t2.T - t1.T / std::sqrt(c)).norm() < 1e-12);
}

TEST_CASE("ellipticity lower bound holds on samples") {
  Box box;
  box.lo = vec2(-2, -2);
  box.hi = vec2(2, 2);
  DiffusionField J = make_diffusion(
      {"diag_quad", {{"a", {1.0, 2.0}}, {"b", {0.5, 0.0}}, {"axis", {1, 1}}}},
      2, box);
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    Vec z = vec2(rng.uniform(-2, 2), rng.uniform(-2, 2));
    Vec xi = vec2(rng.normal(), rng.normal());
    if (xi.norm() == 0) continue;
    double q = xi.dot(J.value(z) * xi);
    CHECK(q >= J.nu * xi.squaredNorm() * (1 - 1e-12));
    Eigen::SelfAdjointEigenSolver<Mat> es(J.value(z));
    CHECK(es.eigenvalues().maxCoeff() <= J.upper * (1 + 1e-12));
  }
}

TEST_CASE("transform: identity, diagonal, and full 2x2") {
  Transform ti = diagonalizing_transform(Mat(Mat::Identity(2, 2)));
  CHECK((ti.T - Mat::Identity(2, 2)).norm() < 1e-14);

  Mat D(2, 2);
  D << 4, 0, 0, 1;
  Transform td = diagonalizing_transform(D);
  CHECK(td.T(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(td.T(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(td.det == doctest::Approx(0.5).epsilon(1e-13));

  // hand Cholesky check: J = [[2,1],[1,2]], det J = 3
  Mat Jm(2, 2);
  Jm << 2, 1, 1, 2;
  Transform t = diagonalizing_transform(Jm);
  Mat should_be_I = t.T.transpose() * Jm * t.T;
  CHECK((should_be_I - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(std::abs(t.det - 1.0 / std::sqrt(3.0)) <= 1e-12 / std::sqrt(3.0));
}

TEST_CASE("transform rejects ellipticity violations") {
  Mat bad(2, 2);
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(diagonalizing_transform(bad), DomainError);
}

TEST_CASE("transform is locally Lipschitz in J") {
  Mat Jm(3, 3);
  Jm << 2, 0.4, 0.1, 0.4, 1.6, 0.2, 0.1, 0.2, 1.3;
  Mat E(3, 3);
  E << 0.2, 0.1, 0, 0.1, -0.3, 0.05, 0, 0.05, 0.4;  // symmetric direction
  Transform t0 = diagonalizing_transform(Jm);
  double ratio_ref = 0.0;
  for (double delta : {1e-3, 1e-4, 1e-5, 1e-6}) {
    Transform t = diagonalizing_transform(Mat(Jm + delta * E));
    double ratio = (t.T - t0.T).norm() / delta;
    if (ratio_ref == 0.0)
      ratio_ref = ratio;
    else
      CHECK(ratio == doctest::Approx(ratio_ref).epsilon(0.05));
  }
}

TEST_CASE("critical points: single quadratic well") {
  const int N = 2;
  FieldSpec vs{"quadratic_well", {{"c", {1.0}}, {"center", {0, 0}}}};
  PotentialField V = make_potential(vs, N);
  DiffusionField J = identity_J(N);
  Box box;
  box.lo = vec2(-2, -2);
  box.hi = vec2(2, 2);
  auto crit = find_gamma_critical_points(box, 11, 1e-10, V, J, N, 3.0);
  REQUIRE(crit.size() == 1);
  CHECK(crit[0].z.norm() < 1e-8);
  CHECK(crit[0].kind == CritKind::Minimum);
}

TEST_CASE("critical points: symmetric double well has two minima and a saddle") {
  const int N = 2;
  FieldSpec vs{"gaussian_wells",
               {{"base", {1.5}},
                {"depths", {0.4, 0.4}},
                {"centers", {-1, 0, 1, 0}},
                {"widths", {0.8, 0.8}}}};
  PotentialField V = make_potential(vs, N);
  DiffusionField J = identity_J(N);
  Box box;
  box.lo = vec2(-2.5, -1.5);
  box.hi = vec2(2.5, 1.5);
  auto crit = find_gamma_critical_points(box, 15, 1e-10, V, J, N, 3.0);

  int minima = 0, saddles = 0;
  for (const auto& c : crit) {
    if (c.kind == CritKind::Minimum) ++minima;
    if (c.kind == CritKind::Saddle) ++saddles;
  }
  CHECK(minima == 2);
  CHECK(saddles == 1);

  // dense lattice oracle: global minimum location of Gamma
  double best = 1e300;
  Vec argbest;
  for (int i = 0; i <= 400; ++i)
    for (int j = 0; j <= 240; ++j) {
      Vec z = vec2(-2.5 + 5.0 * i / 400.0, -1.5 + 3.0 * j / 240.0);
      double g = gamma_eval(z, V, J, N, 3.0).gamma;
      if (g < best) {
        best = g;
        argbest = z;
      }
    }
  double match = 1e300;
  for (const auto& c : crit)
    if (c.kind == CritKind::Minimum)
      match = std::min(match, (c.z - argbest).norm());
  CHECK(match < 5.0 / 400.0 + 1e-6);  // within one oracle lattice cell
  // the saddle sits between the wells, on the symmetry axis
  for (const auto& c : crit)
    if (c.kind == CritKind::Saddle) CHECK(c.z.norm() < 1e-6);
}

TEST_CASE("critical points: constant landscape flags degenerate") {
  const int N = 2;
  PotentialField V = const_V(N, 1.0);
  DiffusionField J = identity_J(N);
  Box box;
  box.lo = vec2(-1, -1);
  box.hi = vec2(1, 1);
  auto crit = find_gamma_critical_points(box, 9, 1e-8, V, J, N, 3.0);
  REQUIRE(crit.size() == 1);
  CHECK(crit[0].kind == CritKind::Degenerate);
}

TEST_CASE("finite-difference Hessian fallback matches the analytic one") {
  const int N = 2;
  FieldSpec vs{"gaussian_wells",
               {{"base", {2.0}},
                {"depths", {0.7}},
                {"centers", {0.3, -0.1}},
                {"widths", {1.1}}}};
  PotentialField V = make_potential(vs, N);
  Vec z = vec2(0.5, 0.2);
  Mat Ha = V.hess(z);
  Mat Hf = fd_hessian(V.grad, z);
  CHECK((Ha - Hf).cwiseAbs().maxCoeff() < 1e-7);
}
