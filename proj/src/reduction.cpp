#include "concentra/reduction.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "concentra/fields.hpp"

namespace concentra {

namespace {

double dj_magnitude(const DiffusionField& J, const Vec& s, int N) {
  double acc = 0.0;
  for (int i = 0; i < N; ++i) acc += J.deriv(s, i).squaredNorm();
  return std::sqrt(acc);
}

}  // namespace

Reduction::Reduction(double eps, const ProblemSpec& spec,
                     std::shared_ptr<const RadialProfile> profile,
                     const ReductionOptions& opts)
    : eps_(eps),
      spec_(spec),
      profile_(std::move(profile)),
      opts_(opts),
      f_(spec.grid, eps, spec, EnergyModel::rescaled()) {
  if (!(eps > 0)) throw ConfigError("reduction needs eps > 0");
  if (eps > opts_.eps_max)
    throw ConfigError("reduction refuses eps above eps_max = " +
                      std::to_string(opts_.eps_max));
  if (!profile_) throw ConfigError("reduction needs a radial profile");
}

GridFunction Reduction::profile_at(const Vec& xi) const {
  ScaledProfile sp = scaled_profile(xi, eps_, profile_, spec_.V, spec_.J);
  return sample(spec_.grid, [&](const Vec& x) { return sp.eval(x); });
}

std::vector<GridFunction> Reduction::tangent_basis(const Vec& xi) const {
  const int N = spec_.N;
  Vec s = eps_ * xi;
  double v = spec_.V.value(s);
  Vec gv = spec_.V.grad(s);
  Mat Jz = spec_.J.value(s);
  Mat Jinv = Jz.inverse();
  double alpha = std::pow(v, 1.0 / (spec_.p - 1.0));
  double beta = std::sqrt(v);
  std::vector<Mat> dJinv(N);  // d/ds_i of J^{-1} = -J^{-1} dJ J^{-1}
  for (int i = 0; i < N; ++i) dJinv[i] = -Jinv * spec_.J.deriv(s, i) * Jinv;

  std::vector<GridFunction> basis(N, GridFunction(spec_.grid));
  const RadialProfile& U = *profile_;
  const GridDomain& d = *spec_.grid;
  for (long node = 0; node < basis[0].size(); ++node) {
    Vec x = d.node_point(node);
    Vec w = x - xi;
    double rho2 = w.dot(Jinv * w);
    double rho = std::sqrt(std::max(rho2, 0.0));
    double Uval = U.value(beta * rho);
    double Up = U.deriv(beta * rho);
    Vec Jinvw = Jinv * w;
    for (int i = 0; i < N; ++i) {
      double dalpha = eps_ * gv(i) * std::pow(v, 1.0 / (spec_.p - 1.0) - 1.0) /
                      (spec_.p - 1.0);
      double dbeta = eps_ * 0.5 * gv(i) / beta;
      double term = dalpha * Uval;
      if (rho > 1e-12) {
        // d rho / d xi_i = (-(J^{-1}w)_i + eps/2 w^t dJinv/ds_i w) / rho
        double drho = (-Jinvw(i) + 0.5 * eps_ * w.dot(dJinv[i] * w)) / rho;
        term += alpha * Up * (dbeta * rho + beta * drho);
      }
      basis[i].v[node] = term;
    }
  }

  Mat G(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j) G(i, j) = G(j, i) = dot_mesh(basis[i], basis[j]);
  Eigen::SelfAdjointEigenSolver<Mat> es(G);
  double lmin = es.eigenvalues().minCoeff();
  double lmax = es.eigenvalues().maxCoeff();
  if (!(lmin > 0.0) || lmax / lmin > opts_.gram_cond_max)
    throw SolverError(
        "tangent basis is degenerate (Gram condition too large); the grid "
        "is too coarse for this profile");
  return basis;
}

GridFunction Reduction::project(const std::vector<GridFunction>& basis,
                                const GridFunction& v) const {
  const int N = static_cast<int>(basis.size());
  Mat G(N, N);
  Vec rhs(N);
  for (int i = 0; i < N; ++i) {
    rhs(i) = dot_mesh(basis[i], v);
    for (int j = i; j < N; ++j)
      G(i, j) = G(j, i) = dot_mesh(basis[i], basis[j]);
  }
  Vec coef = G.ldlt().solve(rhs);
  GridFunction out = v;
  for (int i = 0; i < N; ++i) axpy(-coef(i), basis[i], out);
  return out;
}

ReducedSample Reduction::solve_correction(const Vec& xi) const {
  ReducedSample sample;
  sample.xi = xi;

  GridFunction z = profile_at(xi);
  std::vector<GridFunction> basis = tangent_basis(xi);
  auto H = f_.hessian_action(z);  // linearization frozen at z_xi
  auto A = [&](const GridFunction& u) { return project(basis, H(project(basis, u))); };

  Vec s = eps_ * xi;
  double natural = eps_ * dj_magnitude(spec_.J, s, spec_.N) +
                   eps_ * spec_.V.grad(s).norm() + eps_ * eps_;
  double floor = 1e-3 * natural;

  GridFunction w(spec_.grid);
  double prev_update = 1e300;
  int grow_streak = 0;
  long it = 0;
  for (; it < opts_.max_iterations; ++it) {
    GridFunction grad = f_.gradient(z + w);
    GridFunction r = project(basis, grad);
    sample.residual = norm_mesh(r);
    MinresResult lin = minres(A, -1.0 * r, opts_.minres_max_iterations,
                              opts_.minres_rtol);
    if (lin.breakdown)
      throw SolverError("correction solve: Krylov breakdown at xi = " +
                        format_point(xi));
    GridFunction delta = project(basis, lin.x);
    double un = norm_h1(delta);
    axpy(1.0, delta, w);
    w = project(basis, w);  // keep w orthogonal to the tangent basis
    if (un < std::max(opts_.tol, floor)) {
      ++it;
      break;
    }
    if (un > prev_update) {
      if (++grow_streak >= 3)
        throw SolverError(
            "correction iteration diverging at eps = " + std::to_string(eps_) +
            ", xi = " + format_point(xi) + "; eps is not small enough");
    } else {
      grow_streak = 0;
    }
    prev_update = un;
  }
  if (it >= opts_.max_iterations)
    throw SolverError("correction iteration exceeded 100 steps at xi = " +
                      format_point(xi));

  GridFunction grad = f_.gradient(z + w);
  sample.residual = norm_mesh(project(basis, grad));
  sample.w_norm = norm_h1(w);
  sample.phi = f_.value(z + w);
  sample.iterations = it;
  sample.w = std::move(w);
  if (opts_.verbose)
    std::fprintf(stderr,
                 "[concentra] correction at xi = %s: %ld iterations, |w| = "
                 "%.3g, residual = %.3g\n",
                 format_point(xi).c_str(), it, sample.w_norm, sample.residual);
  return sample;
}

double Reduction::phi_only(const Vec& xi) const {
  ReducedSample s = solve_correction(xi);
  return s.phi;
}

ReducedSample Reduction::reduced_energy(const Vec& xi) const {
  ReducedSample sample = solve_correction(xi);
  const int N = spec_.N;
  Vec g(N);
  for (int a = 0; a < N; ++a) {
    Vec xp = xi, xm = xi;
    xp(a) += opts_.h_xi;
    xm(a) -= opts_.h_xi;
    g(a) = (phi_only(xp) - phi_only(xm)) / (2.0 * opts_.h_xi);
  }
  sample.grad_phi = g;
  return sample;
}

std::vector<ReducedCritical> Reduction::reduced_critical_points(
    const Box& xi_box, int coarse_grid, double gamma_tol,
    const SolverOptions& solver_opts) const {
  // physical image of the xi box
  Box zbox;
  zbox.lo = eps_ * xi_box.lo;
  zbox.hi = eps_ * xi_box.hi;
  std::vector<LandscapeSample> crit = find_gamma_critical_points(
      zbox, coarse_grid, gamma_tol, spec_.V, spec_.J, spec_.N, spec_.p);

  auto grad_phi = [&](const Vec& xi) {
    Vec g(spec_.N);
    for (int a = 0; a < spec_.N; ++a) {
      Vec xp = xi, xm = xi;
      xp(a) += opts_.h_xi;
      xm(a) -= opts_.h_xi;
      g(a) = (phi_only(xp) - phi_only(xm)) / (2.0 * opts_.h_xi);
    }
    return g;
  };
  auto hess_phi = [&](const Vec& xi) {
    const double d = opts_.hess_step;
    Mat H(spec_.N, spec_.N);
    double phi0 = phi_only(xi);
    Vec phip(spec_.N), phim(spec_.N);
    for (int a = 0; a < spec_.N; ++a) {
      Vec xp = xi, xm = xi;
      xp(a) += d;
      xm(a) -= d;
      phip(a) = phi_only(xp);
      phim(a) = phi_only(xm);
      H(a, a) = (phip(a) - 2 * phi0 + phim(a)) / (d * d);
    }
    for (int a = 0; a < spec_.N; ++a)
      for (int b = a + 1; b < spec_.N; ++b) {
        Vec xpp = xi, xpm = xi, xmp = xi, xmm = xi;
        xpp(a) += d; xpp(b) += d;
        xpm(a) += d; xpm(b) -= d;
        xmp(a) -= d; xmp(b) += d;
        xmm(a) -= d; xmm(b) -= d;
        H(a, b) = H(b, a) = (phi_only(xpp) - phi_only(xpm) - phi_only(xmp) +
                             phi_only(xmm)) /
                            (4 * d * d);
      }
    return H;
  };

  std::vector<ReducedCritical> out;
  for (const auto& cp : crit) {
    Vec xi = cp.z / eps_;
    if (!xi_box.contains(xi)) continue;
    bool converged = false;
    Vec g;
    try {
      g = grad_phi(xi);
      Mat H = hess_phi(xi);
      for (int step = 0; step < opts_.newton_max_steps; ++step) {
        if (g.norm() <= opts_.newton_tol) {
          converged = true;
          break;
        }
        Vec dxi = H.fullPivLu().solve(-g);
        double damp = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 12; ++bt) {
          Vec cand = xi + damp * dxi;
          Vec gc = grad_phi(cand);
          if (gc.norm() < g.norm()) {
            xi = cand;
            g = gc;
            moved = true;
            break;
          }
          damp *= 0.5;
        }
        if (!moved) {
          H = hess_phi(xi);  // refresh the frozen Hessian once stuck
          Vec dxi2 = H.fullPivLu().solve(-g);
          Vec cand = xi + dxi2;
          Vec gc = grad_phi(cand);
          if (gc.norm() < g.norm()) {
            xi = cand;
            g = gc;
          } else {
            break;
          }
        }
      }
    } catch (const Error& e) {
      std::fprintf(stderr,
                   "[concentra] reduced Newton at seed %s failed: %s\n",
                   format_point(Vec(cp.z / eps_)).c_str(), e.what());
      continue;
    }
    if (!converged) {
      std::fprintf(stderr,
                   "[concentra] reduced Newton from seed %s did not "
                   "converge; skipped\n",
                   format_point(Vec(cp.z / eps_)).c_str());
      continue;
    }
    ReducedCritical rc;
    rc.xi_star = xi;
    rc.sample = solve_correction(xi);
    rc.sample.grad_phi = g;
    GridFunction full = profile_at(xi) + rc.sample.w;
    SolverOptions polish = solver_opts;
    polish.newton_entry = 1e2;  // the assembled solution is already close
    rc.full_solution = newton_refine(full, f_, polish);
    out.push_back(std::move(rc));
  }
  return out;
}

std::vector<GridFunction> tangent_basis(
    const Vec& xi, double eps, const ProblemSpec& spec,
    std::shared_ptr<const RadialProfile> profile) {
  Reduction red(eps, spec, std::move(profile));
  return red.tangent_basis(xi);
}

ReducedSample solve_correction(const Vec& xi, double eps,
                               const ProblemSpec& spec,
                               std::shared_ptr<const RadialProfile> profile,
                               double tol) {
  ReductionOptions opts;
  opts.tol = tol;
  Reduction red(eps, spec, std::move(profile), opts);
  return red.solve_correction(xi);
}

ReducedSample reduced_energy(const Vec& xi, double eps,
                             const ProblemSpec& spec,
                             std::shared_ptr<const RadialProfile> profile) {
  Reduction red(eps, spec, std::move(profile));
  return red.reduced_energy(xi);
}

}  // namespace concentra
