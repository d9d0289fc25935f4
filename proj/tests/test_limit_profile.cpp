#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "concentra/limit_profile.hpp"
#include "support/radial_bvp_oracle.hpp"

using namespace concentra;

namespace {

// 1D closed form: U(x) = ((p+1)/2)^{1/(p-1)} sech((p-1)x/2)^{2/(p-1)},
// verified by substitution into -U'' + U = U^p.
double soliton_1d(double p, double x) {
  return std::pow(0.5 * (p + 1.0), 1.0 / (p - 1.0)) *
         std::pow(1.0 / std::cosh(0.5 * (p - 1.0) * x), 2.0 / (p - 1.0));
}

PotentialField const_V(int N, double v) {
  return make_potential({"constant", {{"value", {v}}}}, N);
}

DiffusionField identity_J(int N) { return make_diffusion({"identity", {}}, N); }

}  // namespace

TEST_CASE("1D cubic ground state: sech closed form") {
  RadialProfile prof = solve_radial_ground_state(1, 3.0, 1e-8);
  CHECK(std::abs(prof.U0 - std::sqrt(2.0)) < 1e-5 * std::sqrt(2.0));
  CHECK(std::abs(prof.C0 - 16.0 / 3.0) < 1e-5 * 16.0 / 3.0);
  // pointwise agreement with sqrt(2) sech(x), including off-sample radii
  for (double r : {0.013, 0.5, 1.37, 3.0, 6.2}) {
    double exact = std::sqrt(2.0) / std::cosh(r);
    CHECK(prof.value(r) == doctest::Approx(exact).epsilon(2e-5));
    double dexact = -std::sqrt(2.0) * std::tanh(r) / std::cosh(r);
    CHECK(prof.deriv(r) == doctest::Approx(dexact).epsilon(2e-4));
  }
}

TEST_CASE("1D peak value for general p") {
  for (double p : {2.0, 2.5, 4.0}) {
    RadialProfile prof = solve_radial_ground_state(1, p, 1e-9);
    double exact = std::pow(0.5 * (p + 1.0), 1.0 / (p - 1.0));
    CHECK(std::abs(prof.U0 - exact) < 1e-6 * exact);
    CHECK(prof.value(2.0) ==
          doctest::Approx(soliton_1d(p, 2.0)).epsilon(1e-4));
  }
}

TEST_CASE("profile invariants: shape, tail, moments") {
  RadialProfile prof = solve_radial_ground_state(3, 3.0, 1e-8);
  CHECK(prof.U0 > 1.0);
  CHECK(prof.dU[0] == doctest::Approx(0.0).epsilon(1e-12));
  for (size_t i = 1; i < prof.U.size(); ++i) CHECK(prof.U[i] < prof.U[i - 1]);
  CHECK(prof.U.back() < 1e-8 * prof.U0);
  // C0 invariance under the splice radius
  double base = prof.C0;
  for (double rs : {6.0, 8.0, 10.0}) {
    CHECK(std::abs(prof.moment_with_splice(rs) - base) < 1e-6 * base);
  }
}

TEST_CASE("3D cubic ground state cross-validated by the BVP oracle") {
  RadialProfile prof = solve_radial_ground_state(3, 3.0, 1e-9);
  auto [u0, c0] = radial_oracle::ground_state(3, 3.0, 20.0, 4.5);
  CHECK(std::abs(prof.U0 - u0) < 1e-5 * u0);
  CHECK(std::abs(prof.C0 - c0) < 1e-5 * c0);
}

TEST_CASE("ODE residual drops by ~4 when the step halves") {
  auto max_residual = [](const RadialProfile& prof) {
    // centered FD residual of -U'' - (N-1)/r U' + U - U^p on the samples,
    // restricted to radii before the tail splice
    double worst = 0.0;
    for (size_t i = 1; i + 1 < prof.U.size(); ++i) {
      double r = prof.r[i];
      if (r > prof.tail_start - 2.0 * prof.hr) break;
      double lap = (prof.U[i + 1] - 2 * prof.U[i] + prof.U[i - 1]) /
                   (prof.hr * prof.hr);
      double drift = (prof.N - 1) / r * (prof.U[i + 1] - prof.U[i - 1]) /
                     (2 * prof.hr);
      double res = -lap - drift + prof.U[i] - std::pow(prof.U[i], prof.p);
      worst = std::max(worst, std::abs(res));
    }
    return worst;
  };
  RadialProfile coarse = solve_radial_ground_state(3, 3.0, 1e-10, 20.0, 0.04);
  RadialProfile fine = solve_radial_ground_state(3, 3.0, 1e-10, 20.0, 0.02);
  double ratio = max_residual(coarse) / max_residual(fine);
  CHECK(ratio > 3.0);
  CHECK(ratio < 5.0);
}

TEST_CASE("shooting rejects a hopeless bracket") {
  CHECK_THROWS_AS(solve_radial_ground_state(1, 1.0001, 1e-6),
                  SolverError);  // ground state peak ~1, outside [1,10]
}

TEST_CASE("scaled profile: unit coefficients reduce to U(|x - xi|)") {
  auto prof =
      std::make_shared<const RadialProfile>(solve_radial_ground_state(2, 3.0, 1e-8));
  PotentialField V = const_V(2, 1.0);
  DiffusionField J = identity_J(2);
  Vec xi(2);
  xi << 0.5, -0.25;
  ScaledProfile sp = scaled_profile(xi, 0.1, prof, V, J);
  CHECK(sp.alpha == doctest::Approx(1.0));
  CHECK(sp.beta == doctest::Approx(1.0));
  Vec x(2);
  x << 1.5, 0.75;
  CHECK(sp.eval(x) == doctest::Approx(prof->value((x - xi).norm())).epsilon(1e-12));
  // peak at the center
  CHECK(sp.eval(xi) == doctest::Approx(prof->U0 * sp.alpha));
}

TEST_CASE("scaled profile: V = 4 gives alpha = beta = 2 for p = 3") {
  auto prof =
      std::make_shared<const RadialProfile>(solve_radial_ground_state(2, 3.0, 1e-8));
  PotentialField V = const_V(2, 4.0);
  DiffusionField J = identity_J(2);
  ScaledProfile sp = scaled_profile(Vec::Zero(2), 0.2, prof, V, J);
  CHECK(sp.alpha == doctest::Approx(2.0));
  CHECK(sp.beta == doctest::Approx(2.0));
}

TEST_CASE("scaled profile: diag(4,1) stretches level sets by 2 on axis 1") {
  auto prof =
      std::make_shared<const RadialProfile>(solve_radial_ground_state(2, 3.0, 1e-8));
  PotentialField V = const_V(2, 1.0);
  DiffusionField J = make_diffusion({"diag_const", {{"diag", {4, 1}}}}, 2);
  ScaledProfile sp = scaled_profile(Vec::Zero(2), 0.1, prof, V, J);
  Vec e1(2), e2(2);
  e1 << 1, 0;
  e2 << 0, 1;
  double t = 1.3;
  CHECK(sp.eval(Vec(2 * t * e1)) ==
        doctest::Approx(sp.eval(Vec(t * e2))).epsilon(1e-12));
  // decay beyond the profile support
  CHECK(sp.eval(Vec(50.0 * e2)) < 1e-8 * sp.alpha * prof->U0);
}

TEST_CASE("sigma closed form: C1 = C0/4 at p = 3 and the 1D value 4/3") {
  RadialProfile prof = solve_radial_ground_state(1, 3.0, 1e-8);
  CHECK(sigma_c1(prof) == doctest::Approx(prof.C0 / 4.0));
  PotentialField V = const_V(1, 1.0);
  DiffusionField J = identity_J(1);
  double sigma = sigma_closed_form(Vec::Zero(1), prof, V, J, 1);
  CHECK(sigma == doctest::Approx(4.0 / 3.0).epsilon(1e-5));
}

TEST_CASE("frozen numeric sigma matches the 1D closed form within 1%") {
  auto prof =
      std::make_shared<const RadialProfile>(solve_radial_ground_state(1, 3.0, 1e-8));
  ProblemSpec spec;
  spec.N = 1;
  spec.p = 3.0;
  spec.V = const_V(1, 1.0);
  spec.J = identity_J(1);
  GridPtr grid = build_grid(1, 20.0, 2048);
  spec.grid = grid;
  FrozenGroundState st = frozen_sigma_numeric(Vec::Zero(1), grid, prof, spec);
  CHECK(std::abs(st.sigma - 4.0 / 3.0) < 0.01 * 4.0 / 3.0);
  CHECK(st.nehari_residual <= 1e-8 * hv_norm(st.u, spec.V) * hv_norm(st.u, spec.V) + 1e-12);
}

TEST_CASE("frozen numeric sigma tracks C1 Gamma at varying z (1D)") {
  auto prof =
      std::make_shared<const RadialProfile>(solve_radial_ground_state(1, 3.0, 1e-8));
  ProblemSpec spec;
  spec.N = 1;
  spec.p = 3.0;
  spec.V = make_potential(
      {"quadratic_well", {{"c", {0.05}}, {"center", {0.0}}}}, 1);
  spec.J = identity_J(1);
  GridPtr grid = build_grid(1, 18.0, 1536);
  spec.grid = grid;
  for (double z0 : {0.0, 1.0, -1.5}) {
    Vec z(1);
    z << z0;
    FrozenGroundState st = frozen_sigma_numeric(z, grid, prof, spec);
    double cf = sigma_closed_form(z, *prof, spec.V, spec.J, 1);
    CHECK(std::abs(st.sigma / cf - 1.0) < 0.02);
  }
}

TEST_CASE("frozen sigma scales like c^{N/2} when J -> cJ") {
  auto prof =
      std::make_shared<const RadialProfile>(solve_radial_ground_state(1, 3.0, 1e-8));
  ProblemSpec spec;
  spec.N = 1;
  spec.p = 3.0;
  spec.V = const_V(1, 1.0);
  spec.J = identity_J(1);
  GridPtr grid = build_grid(1, 24.0, 2048);
  spec.grid = grid;
  double s1 = frozen_sigma_numeric(Vec::Zero(1), grid, prof, spec).sigma;
  const double c = 1.7;
  spec.J = make_diffusion({"diag_const", {{"diag", {c}}}}, 1);
  double s2 = frozen_sigma_numeric(Vec::Zero(1), grid, prof, spec).sigma;
  CHECK(s2 / s1 == doctest::Approx(std::sqrt(c)).epsilon(0.01));
}

TEST_CASE("sigma directional derivative") {
  auto prof =
      std::make_shared<const RadialProfile>(solve_radial_ground_state(1, 3.0, 1e-8));
  GridPtr grid = build_grid(1, 18.0, 1536);

  SUBCASE("constant fields give zero") {
    ProblemSpec spec;
    spec.N = 1;
    spec.p = 3.0;
    spec.V = const_V(1, 1.3);
    spec.J = identity_J(1);
    spec.grid = grid;
    FrozenGroundState st = frozen_sigma_numeric(Vec::Zero(1), grid, prof, spec);
    CHECK(std::abs(sigma_directional_derivative(Vec::Zero(1), 0, st, spec)) <
          1e-10);
  }

  SUBCASE("V = 1 + z^2: zero by symmetry at 0, FD match at 0.5") {
    ProblemSpec spec;
    spec.N = 1;
    spec.p = 3.0;
    spec.V = make_potential(
        {"quadratic_well", {{"c", {1.0}}, {"center", {0.0}}}}, 1);
    spec.J = identity_J(1);
    spec.grid = grid;
    FrozenGroundState at0 = frozen_sigma_numeric(Vec::Zero(1), grid, prof, spec);
    CHECK(std::abs(sigma_directional_derivative(Vec::Zero(1), 0, at0, spec)) <
          1e-9);

    Vec z(1);
    z << 0.5;
    FrozenGroundState st = frozen_sigma_numeric(z, grid, prof, spec);
    double ds = sigma_directional_derivative(z, 0, st, spec);
    const double dz = 1e-2;
    Vec zp(1), zm(1);
    zp << 0.5 + dz;
    zm << 0.5 - dz;
    double fd = (frozen_sigma_numeric(zp, grid, prof, spec).sigma -
                 frozen_sigma_numeric(zm, grid, prof, spec).sigma) /
                (2 * dz);
    CHECK(std::abs(ds / fd - 1.0) < 0.02);
  }
}

TEST_CASE("radial profile round-trips through its text file") {
  RadialProfile prof = solve_radial_ground_state(2, 3.0, 1e-8);
  save_radial_profile(prof, "/tmp/concentra_prof.txt", {"unit test"});
  RadialProfile back = load_radial_profile("/tmp/concentra_prof.txt");
  CHECK(back.N == prof.N);
  CHECK(back.U0 == doctest::Approx(prof.U0).epsilon(1e-15));
  CHECK(back.C0 == doctest::Approx(prof.C0).epsilon(1e-15));
  CHECK(back.value(1.234) == doctest::Approx(prof.value(1.234)).epsilon(1e-6));
}
