#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "concentra/diagnostics.hpp"

using namespace concentra;

namespace {

std::shared_ptr<const RadialProfile> profile_1d() {
  static auto p = std::make_shared<const RadialProfile>(
      solve_radial_ground_state(1, 3.0, 1e-8));
  return p;
}

ProblemSpec const_spec_1d(double L, int n) {
  ProblemSpec s;
  s.N = 1;
  s.p = 3.0;
  s.V = make_potential({"constant", {{"value", {1.0}}}}, 1);
  s.J = make_diffusion({"identity", {}}, 1);
  s.grid = build_grid(1, L, n);
  return s;
}

}  // namespace

TEST_CASE("global max point: node hit, sub-cell refinement, ties") {
  GridPtr dom = build_grid(1, 10.0, 201);  // h = 0.1

  SUBCASE("bump centered exactly on a node") {
    GridFunction u = sample(dom, [](const Vec& x) {
      return std::exp(-(x(0) - 0.5) * (x(0) - 0.5));
    });
    MaxPoint mp = global_max_point(u);
    CHECK(mp.unique);
    CHECK(mp.x(0) == doctest::Approx(0.5).epsilon(1e-10));
  }

  SUBCASE("sech bump centered mid-cell is refined to h^2 accuracy") {
    double c = 0.5 + 0.05 * 0.6;  // 60% into a cell
    GridFunction u = sample(
        dom, [&](const Vec& x) { return std::sqrt(2.0) / std::cosh(x(0) - c); });
    MaxPoint mp = global_max_point(u);
    CHECK(std::abs(mp.x(0) - c) < dom->h * dom->h * 10);
  }

  SUBCASE("two equal bumps: lexicographically smallest index, not unique") {
    GridFunction u(dom);
    u.v[40] = 1.0;
    u.v[150] = 1.0;
    MaxPoint mp = global_max_point(u);
    CHECK_FALSE(mp.unique);
    CHECK(mp.x(0) == doctest::Approx(dom->node_point(40)(0)));
  }

  GridFunction zero(dom);
  CHECK_THROWS_AS(global_max_point(zero), DomainError);
}

TEST_CASE("barycenter: symmetry, equivariance, clipping") {
  GridPtr dom = build_grid(2, 6.0, 121);
  Vec xi(2);
  xi << 0.8, -0.4;
  auto bump = [&](const Vec& c) {
    return sample(dom, [&](const Vec& x) {
      return std::exp(-2.0 * (x - c).squaredNorm());
    });
  };
  Vec b = barycenter(bump(xi), 5.0);
  CHECK((b - xi).norm() < 1e-10);

  Vec delta(2);
  delta << 0.3, 0.5;
  Vec b2 = barycenter(bump(Vec(xi + delta)), 5.0);
  CHECK((b2 - b - delta).norm() < 1e-8);

  // far bump clips onto the sphere of radius R (up to angular spread)
  Vec far(2);
  far << 4.0, 0.0;
  Vec b3 = barycenter(bump(far), 1.5);
  CHECK(b3.norm() == doctest::Approx(1.5).epsilon(0.01));
  CHECK(b3(0) > 0.99 * b3.norm());

  GridFunction zero(dom);
  CHECK_THROWS_AS(barycenter(zero, 1.0), DomainError);
}

TEST_CASE("exterior bound check") {
  GridPtr dom = build_grid(1, 4.0, 201);
  Box lam;
  lam.lo = Vec::Constant(1, -2.0);
  lam.hi = Vec::Constant(1, 2.0);
  auto pen = make_penalty(lam, 3.0, 1.0);

  GridFunction inside = sample(dom, [](const Vec& x) {
    return std::abs(x(0)) < 1.5 ? 1.0 : 0.0;
  });
  auto [ok1, m1] = exterior_bound_check(inside, *pen);
  CHECK(ok1);
  CHECK(m1 == 0.0);

  GridFunction flat = sample(dom, [&](const Vec&) { return 2.0 * pen->ell; });
  auto [ok2, m2] = exterior_bound_check(flat, *pen);
  CHECK_FALSE(ok2);
  CHECK(m2 == doctest::Approx(2.0 * pen->ell));
}

TEST_CASE("Pucci-Serrin residual: zero field, exact solution, negative control") {
  SUBCASE("plateau supported outside the domain gives exactly zero") {
    ProblemSpec spec = const_spec_1d(10.0, 301);
    GridFunction u = sample(
        spec.grid, [](const Vec& x) { return std::sqrt(2.0) / std::cosh(x(0)); });
    Vec faraway = Vec::Constant(1, 1e6);
    PucciSerrinResult r =
        pucci_serrin_residual(u, 1.0, spec, 0, faraway, 1.0, 2.0);
    CHECK(r.residual == 0.0);
  }

  SUBCASE("exact 1D solution: order >= 1.8 under refinement") {
    // plateau center offset from the bump so parity cannot cancel the
    // integrand; the ramp covers the bump shoulders
    Vec x0 = Vec::Constant(1, 0.5);
    double prev = 0.0;
    int k = 0;
    for (int n : {331, 661, 1321}) {
      ProblemSpec spec = const_spec_1d(22.0, n);
      GridFunction u = sample(spec.grid, [](const Vec& x) {
        return std::sqrt(2.0) / std::cosh(x(0));
      });
      PucciSerrinResult r =
          pucci_serrin_residual(u, 1.0, spec, 0, x0, 2.0, 15.5);
      CHECK(r.support_ok);
      if (k > 0) CHECK(std::log2(prev / r.residual) > 1.8);
      prev = r.residual;
      ++k;
    }
  }

  SUBCASE("random non-solutions show no decrease") {
    Vec x0 = Vec::Constant(1, 0.5);
    double prev = -1.0;
    for (int n : {331, 661, 1321}) {
      ProblemSpec spec = const_spec_1d(22.0, n);
      // same decay class as the soliton, but not a solution
      GridFunction u = sample(spec.grid, [&](const Vec& x) {
        return 1.5 / std::cosh(0.8 * x(0)) * (1.0 + 0.3 * std::sin(x(0)));
      });
      PucciSerrinResult r =
          pucci_serrin_residual(u, 1.0, spec, 0, x0, 2.0, 15.5);
      if (prev > 0) CHECK(r.residual > 0.5 * prev);  // O(1), no h^2 decay
      prev = r.residual;
    }
    CHECK(prev > 1e-3);
  }
}

TEST_CASE("concentration gradient test: zero for constant fields") {
  ProblemSpec spec = const_spec_1d(6.0, 513);
  auto prof = profile_1d();
  double eps = 0.2;
  ScaledProfile sp = scaled_profile(Vec::Zero(1), eps, prof, spec.V, spec.J);
  GridFunction u =
      sample(spec.grid, [&](const Vec& x) { return sp.eval_physical(x); });
  Vec ident = concentration_gradient_test(u, eps, Vec::Zero(1), spec);
  CHECK(ident.norm() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("concentration gradient test signs track grad Gamma at a pinned point") {
  // quadratic well with the minimum at 0.6; pin the profile at 0 where
  // dV/dz < 0, so Sigma' = C1 Gamma' < 0 there
  ProblemSpec spec;
  spec.N = 1;
  spec.p = 3.0;
  spec.V = make_potential(
      {"quadratic_well", {{"c", {0.4}}, {"center", {0.6}}}}, 1);
  spec.J = make_diffusion({"identity", {}}, 1);
  spec.grid = build_grid(1, 4.0, 769);
  auto prof = profile_1d();
  double eps = 0.1;
  Vec pin = Vec::Zero(1);
  ScaledProfile sp = scaled_profile(pin, eps, prof, spec.V, spec.J);
  GridFunction u =
      sample(spec.grid, [&](const Vec& x) { return sp.eval_physical(x); });
  Vec ident = concentration_gradient_test(u, eps, pin, spec);
  Vec gg = gamma_eval(pin, spec.V, spec.J, 1, 3.0).grad;
  CHECK(gg(0) < 0.0);
  CHECK(ident(0) * gg(0) > 0.0);  // the identity vector points along grad Gamma
  CHECK(std::abs(ident(0)) > 1e-3);
}

TEST_CASE("concentration series on a 1D quadratic well") {
  ProblemSpec spec;
  spec.N = 1;
  spec.p = 3.0;
  spec.V = make_potential(
      {"quadratic_well", {{"c", {0.6}}, {"center", {0.3}}}}, 1);
  spec.J = make_diffusion({"identity", {}}, 1);
  spec.grid = build_grid(1, 4.0, 1025);
  Box lam;
  lam.lo = Vec::Constant(1, -1.8);
  lam.hi = Vec::Constant(1, 2.4);
  spec.lambda = lam;
  auto pen = make_penalty(lam, spec.p, spec.V.alpha);
  auto prof = profile_1d();
  SolverOptions opts;
  opts.nehari_tol = 1e-6;

  Vec seed = Vec::Constant(1, 0.3);
  ConcentrationSeries series =
      concentration_series(spec, pen, prof, 0.4, 3, seed, opts);
  REQUIRE(series.records.size() == 3);
  REQUIRE_FALSE(series.truncated);
  for (const auto& r : series.records) CHECK(r.converged);
  // max point locked to the Gamma minimum within a cell, energies near
  // sigma, exterior bound satisfied at the finest levels
  double h = spec.grid->h;
  for (const auto& r : series.records) {
    CHECK(std::abs(r.x_eps(0) - 0.3) <= 2.5 * h);
    CHECK(r.gamma_at_x >= series.gamma_min_lambda - 1e-12);
  }
  const auto& last = series.records.back();
  CHECK(last.exterior_ok);
  CHECK(std::abs(last.scaled_energy / series.sigma_at_seed - 1.0) < 0.05);

  // hypothesis check: a Lambda whose boundary minimum beats the interior
  // minimum is rejected
  Box bad;
  bad.lo = Vec::Constant(1, 1.0);
  bad.hi = Vec::Constant(1, 2.0);
  ProblemSpec spec2 = spec;
  spec2.lambda = bad;
  auto pen2 = make_penalty(bad, spec.p, spec.V.alpha);
  CHECK_THROWS_AS(
      concentration_series(spec2, pen2, prof, 0.4, 3, Vec::Constant(1, 1.5),
                           opts),
      ConfigError);
}
