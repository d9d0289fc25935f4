#include "concentra/solvers.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <thread>

#include "concentra/diagnostics.hpp"
#include "concentra/limit_profile.hpp"

namespace concentra {

namespace {

double wall_now() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

}  // namespace

double nehari_scale(const GridFunction& u, const DiscreteFunctional& f) {
  if (f.kind() == EnergyModel::Kind::Penalized) {
    // phi'(t) = dE(tu)[u]; g(x,s)/s nondecreasing makes the root unique
    auto phi_prime = [&](double t) { return f.directional_at_scale(u, t); };
    if (!(f.power_part(u) > 0.0))
      throw DomainError(
          "Nehari scaling needs u positive on a set of positive discrete "
          "measure");
    double hi = 1.0;
    int guard = 0;
    while (phi_prime(hi) > 0.0) {
      hi *= 2.0;
      if (++guard > 80)
        throw SolverError(
            "penalized Nehari scaling found no sign change; the candidate "
            "has no mass inside Lambda");
    }
    double lo = hi * 0.5;
    while (lo > 1e-300 && phi_prime(lo) < 0.0) lo *= 0.5;
    for (int i = 0; i < 200 && (hi - lo) > 1e-12 * hi; ++i) {
      double mid = 0.5 * (lo + hi);
      (phi_prime(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }
  double P = f.power_part(u);
  if (!(P > 0.0))
    throw DomainError(
        "Nehari scaling needs u positive on a set of positive discrete "
        "measure");
  double Q = f.quadratic_part(u);
  return std::pow(Q / P, 1.0 / (f.p() - 1.0));
}

double nehari_scale(const GridFunction& u, double eps, const ProblemSpec& spec,
                    const EnergyModel& model) {
  DiscreteFunctional f(u.dom, eps, spec, model);
  return nehari_scale(u, f);
}

SolveReport nehari_minimize(const GridFunction& seed,
                            const DiscreteFunctional& f,
                            const SolverOptions& opts) {
  double t0 = wall_now();
  SolveReport rep;
  double t = nehari_scale(seed, f);
  GridFunction u = t * seed;
  GridFunction g(u.dom);
  double E = f.value_and_grad(u, g);

  GridFunction u_prev, g_prev;
  double step = 0.0;
  long it = 0;
  for (; it < opts.max_iterations; ++it) {
    double gmax = g.max_abs();
    if (gmax <= opts.nehari_tol) {
      rep.converged = true;
      break;
    }
    // Barzilai-Borwein step from the previous pair, Armijo-safeguarded.
    if (it > 0) {
      GridFunction du = u - u_prev;
      GridFunction dg = g - g_prev;
      double num = dot_mesh(du, du);
      double den = dot_mesh(du, dg);
      step = den > 0 ? num / den : step * 2.0;
    } else {
      step = 0.1 * (1.0 + norm_mesh(u)) / (1.0 + norm_mesh(g));
    }
    step = std::clamp(step, 1e-14, 1e6);

    double gg = dot_mesh(g, g);
    bool accepted = false;
    double Enew = E;
    GridFunction unew;
    for (int bt = 0; bt < 60; ++bt) {
      GridFunction w = u - step * g;
      double tw;
      try {
        tw = nehari_scale(w, f);
      } catch (const Error&) {
        step *= 0.5;
        continue;
      }
      unew = tw * w;
      Enew = f.value(unew);
      if (Enew <= E - 1e-4 * step * gg) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // stagnation: keep the best iterate
    u_prev = u;
    g_prev = g;
    u = std::move(unew);
    E = f.value_and_grad(u, g);
  }

  rep.u = u;
  rep.energy = E;
  rep.grad_max = g.max_abs();
  rep.nehari_residual = std::abs(f.directional_at_scale(u, 1.0));
  rep.iterations = it;
  if (rep.grad_max <= opts.nehari_tol) rep.converged = true;
  rep.wall_seconds = wall_now() - t0;
  if (opts.verbose)
    std::fprintf(stderr,
                 "[concentra] nehari_minimize: %ld iterations, E = %.10g, "
                 "|grad| = %.3g, %s\n",
                 it, E, rep.grad_max, rep.converged ? "converged" : "STALLED");
  return rep;
}

SolveReport nehari_minimize(const GridFunction& seed, double eps,
                            const ProblemSpec& spec, const EnergyModel& model,
                            const SolverOptions& opts) {
  DiscreteFunctional f(seed.dom, eps, spec, model);
  return nehari_minimize(seed, f, opts);
}

MinresResult minres(const std::function<GridFunction(const GridFunction&)>& A,
                    const GridFunction& b, int max_iterations, double rtol) {
  MinresResult out;
  out.x = GridFunction(b.dom);
  double beta1 = norm_mesh(b);
  if (beta1 == 0.0) return out;

  GridFunction r = b;
  GridFunction v_old(b.dom), v = (1.0 / beta1) * r;
  GridFunction w0(b.dom), w1(b.dom);
  double beta = beta1;
  double eta = beta1;
  double gamma0 = 1.0, gamma1 = 1.0, sigma0 = 0.0, sigma1 = 0.0;
  double norm_r = beta1;

  for (int k = 1; k <= max_iterations; ++k) {
    GridFunction Av = A(v);
    Av.check_finite("MINRES operator output");
    double alpha = dot_mesh(v, Av);
    GridFunction rnext = Av;
    axpy(-alpha, v, rnext);
    if (k > 1) axpy(-beta, v_old, rnext);
    double beta_next = norm_mesh(rnext);

    double delta = gamma1 * alpha - gamma0 * sigma1 * beta;
    double rho1 = std::sqrt(delta * delta + beta_next * beta_next);
    double rho2 = sigma1 * alpha + gamma0 * gamma1 * beta;
    double rho3 = sigma0 * beta;
    if (rho1 == 0.0) {
      out.breakdown = true;
      break;
    }
    double gamma_next = delta / rho1;
    double sigma_next = beta_next / rho1;

    GridFunction wnext = v;
    axpy(-rho3, w0, wnext);
    axpy(-rho2, w1, wnext);
    wnext = (1.0 / rho1) * wnext;
    axpy(gamma_next * eta, wnext, out.x);
    eta = -sigma_next * eta;
    norm_r *= std::abs(sigma_next);
    out.iterations = k;
    if (norm_r <= rtol * beta1) break;
    if (beta_next <= 1e-300) break;  // Krylov space exhausted

    v_old = v;
    v = (1.0 / beta_next) * rnext;
    beta = beta_next;
    gamma0 = gamma1;
    gamma1 = gamma_next;
    sigma0 = sigma1;
    sigma1 = sigma_next;
    w0 = w1;
    w1 = wnext;
  }
  out.rel_residual = norm_r / beta1;
  return out;
}

SolveReport newton_refine(const GridFunction& u0, const DiscreteFunctional& f,
                          const SolverOptions& opts) {
  double t0 = wall_now();
  SolveReport rep;
  GridFunction u = u0;
  GridFunction g(u.dom);
  double E = f.value_and_grad(u, g);
  double gmax = g.max_abs();
  if (gmax > opts.newton_entry)
    throw ConfigError(
        "newton_refine needs a near-critical seed (gradient max-norm " +
        std::to_string(gmax) + " above the entry threshold)");

  long steps = 0;
  for (; steps < opts.newton_max_steps; ++steps) {
    if (gmax <= opts.newton_tol) {
      rep.converged = true;
      break;
    }
    auto H = f.hessian_action(u);
    GridFunction rhs = -1.0 * g;
    MinresResult lin =
        minres(H, rhs, opts.minres_max_iterations, opts.minres_rtol);
    if (lin.breakdown) break;
    double s = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 30; ++bt) {
      GridFunction unew = u;
      axpy(s, lin.x, unew);
      GridFunction gnew = f.gradient(unew);
      if (gnew.max_abs() < gmax) {
        u = std::move(unew);
        g = std::move(gnew);
        gmax = g.max_abs();
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) break;  // no decrease: report as unconverged
  }
  if (gmax <= opts.newton_tol) rep.converged = true;
  E = f.value(u);
  rep.u = std::move(u);
  rep.energy = E;
  rep.grad_max = gmax;
  rep.nehari_residual = std::abs(f.directional_at_scale(rep.u, 1.0));
  rep.iterations = steps;
  rep.wall_seconds = wall_now() - t0;
  if (opts.verbose)
    std::fprintf(stderr,
                 "[concentra] newton_refine: %ld steps, |grad| = %.3g, %s\n",
                 steps, gmax, rep.converged ? "converged" : "STALLED");
  return rep;
}

namespace {

// Armijo descent step of one path node; the move is capped so the
// polyline stays coherent. At a Nehari crossing the radial component of
// the gradient vanishes, so plain descent acts tangentially there.
void descend_node(GridFunction& node, const DiscreteFunctional& f,
                  double cap, int steps = 1) {
  for (int k = 0; k < steps; ++k) {
    GridFunction g = f.gradient(node);
    double dn = norm_mesh(g);
    if (dn == 0.0) return;
    double E = f.value(node);
    double s = std::min(1.0, cap / dn);
    bool moved = false;
    for (int bt = 0; bt < 25; ++bt) {
      GridFunction cand = node;
      axpy(-s, g, cand);
      if (f.value(cand) < E) {
        node = std::move(cand);
        moved = true;
        break;
      }
      s *= 0.5;
    }
    if (!moved) return;
  }
}

}  // namespace

MountainPassReport mountain_pass_level(const GridFunction& endpoint,
                                       const DiscreteFunctional& f,
                                       const SolverOptions& opts) {
  const int K = std::max(opts.path_nodes, 8);
  double Eend = f.value(endpoint);
  if (!(Eend < 0.0))
    throw ConfigError("mountain-pass endpoint must have negative energy");

  // initial path: linear in amplitude from 0 to the endpoint
  std::vector<GridFunction> path(K + 1);
  for (int i = 0; i <= K; ++i) path[i] = (double(i) / K) * endpoint;

  MountainPassReport rep;
  rep.endpoint_energy = Eend;

  std::vector<double> E(K + 1);
  auto energies = [&]() {
    for (int i = 0; i <= K; ++i) E[i] = f.value(path[i]);
  };
  // uniform arclength reparametrization of path[a..b], endpoints fixed
  auto redistribute_range = [&](int a, int b) {
    int m = b - a;
    if (m < 2) return;
    std::vector<double> cum(m + 1, 0.0);
    for (int i = 1; i <= m; ++i)
      cum[i] = cum[i - 1] + norm_mesh(path[a + i] - path[a + i - 1]);
    if (cum[m] == 0.0) return;
    std::vector<GridFunction> fresh(m - 1);
    int seg = 1;
    for (int i = 1; i < m; ++i) {
      double target = cum[m] * i / m;
      while (seg < m && cum[seg] < target) ++seg;
      double denom = cum[seg] - cum[seg - 1];
      double t = denom > 0 ? (target - cum[seg - 1]) / denom : 0.0;
      fresh[i - 1] = (1.0 - t) * path[a + seg - 1];
      axpy(t, path[a + seg], fresh[i - 1]);
    }
    for (int i = 1; i < m; ++i) path[a + i] = std::move(fresh[i - 1]);
  };

  // The path must cross the discrete Nehari manifold (DE(w)[w] changes
  // sign between 0 and the negative-energy endpoint). The energy at a
  // crossing bounds the level from below by the manifold infimum, so
  // re-maximizing onto crossings prevents the node set from slipping
  // past the ridge between samples.
  int pin = -1;
  auto remaximize_on_crossings = [&]() {
    // s(0) = 0 with s > 0 just above zero, so segment 0 counts as positive
    std::vector<double> s(K + 1);
    s[0] = 1.0;
    for (int i = 1; i <= K; ++i) s[i] = f.directional_at_scale(path[i], 1.0);
    double best = -1e300;
    GridFunction bestu;
    int best_seg = -1;
    for (int i = 0; i < K; ++i) {
      bool straddles = (s[i] > 0.0 && s[i + 1] <= 0.0) ||
                       (s[i] <= 0.0 && s[i + 1] > 0.0);
      if (!straddles) continue;
      double lo = s[i] > 0.0 ? 0.0 : 1.0;
      double hi = 1.0 - lo;
      GridFunction w;
      for (int bt = 0; bt < 30; ++bt) {
        double mid = 0.5 * (lo + hi);
        w = (1.0 - mid) * path[i];
        axpy(mid, path[i + 1], w);
        (f.directional_at_scale(w, 1.0) > 0.0 ? lo : hi) = mid;
      }
      double Ec = f.value(w);
      if (Ec > best) {
        best = Ec;
        bestu = std::move(w);
        best_seg = i;
      }
    }
    if (best_seg >= 0) {
      // pin the ridge crossing on an interior node and polish it: at the
      // crossing the gradient is tangential, so descent slides toward the
      // col; stop once the iterate falls off the ridge (DE(w)[w] < 0)
      pin = std::clamp(best_seg, 1, K - 1);
      path[pin] = std::move(bestu);
      GridFunction& w = path[pin];
      for (int k = 0; k < 25; ++k) {
        double radial = f.directional_at_scale(w, 1.0);
        if (radial < -1e-3 * norm_h1(w) * norm_h1(w)) break;
        GridFunction g = f.gradient(w);
        double dn = norm_mesh(g);
        if (dn == 0.0) break;
        double E0 = f.value(w);
        double s0 = std::min(1.0, 0.25 * norm_mesh(w) / dn);
        bool moved = false;
        for (int bt = 0; bt < 20; ++bt) {
          GridFunction cand = w;
          axpy(-s0, g, cand);
          if (f.value(cand) < E0) {
            w = std::move(cand);
            moved = true;
            break;
          }
          s0 *= 0.5;
        }
        if (!moved) break;
      }
    }
    return best;  // the bisected crossing energy keeps the manifold bound
  };

  energies();
  double crossing = remaximize_on_crossings();
  energies();
  double level = std::max(*std::max_element(E.begin(), E.end()), crossing);
  rep.level_history.push_back(level);

  long sweep = 0;
  for (; sweep < opts.path_max_sweeps; ++sweep) {
    // local descent on every interior node, capped by the polyline spacing
    for (int i = 1; i < K; ++i) {
      if (i == pin) continue;
      double spacing = 0.45 * std::min(norm_mesh(path[i] - path[i - 1]),
                                       norm_mesh(path[i + 1] - path[i]));
      if (spacing <= 0) spacing = 1e-6;
      descend_node(path[i], f, spacing);
    }
    // keep the polished ridge node out of the reparametrization
    if (pin >= 1 && pin <= K - 1) {
      redistribute_range(0, pin);
      redistribute_range(pin, K);
    } else {
      redistribute_range(0, K);
    }
    crossing = remaximize_on_crossings();
    energies();
    double node_max = *std::max_element(E.begin(), E.end());
    // without a located crossing the sweep gives no trustworthy level
    double raw = crossing > -1e299 ? std::max(node_max, crossing) : level;
    level = std::min(level, raw);
    rep.level_history.push_back(level);

    // stop when the decrease over the last 10 sweeps is < 1e-6 relative
    size_t m = rep.level_history.size();
    if (m > 10) {
      double past = rep.level_history[m - 11];
      if (past - level < 1e-6 * std::abs(level)) break;
    }
  }

  rep.path = std::move(path);
  rep.level = level;
  rep.sweeps = sweep + 1;
  if (opts.verbose)
    std::fprintf(stderr,
                 "[concentra] mountain_pass_level: %ld sweeps, level = %.10g\n",
                 rep.sweeps, rep.level);
  return rep;
}

SolveReport solve_concentrating(double eps, const ProblemSpec& spec,
                                std::shared_ptr<const PenaltyConfig> cfg,
                                std::shared_ptr<const RadialProfile> profile,
                                const Vec& seed_point,
                                const SolverOptions& opts) {
  if (!cfg) throw ConfigError("solve_concentrating needs a PenaltyConfig");
  if (!cfg->lambda.contains(seed_point))
    throw ConfigError("seed point " + format_point(seed_point) +
                      " lies outside Lambda");
  double beta = std::sqrt(spec.V.value(seed_point));
  double dist = 1e300;
  for (int a = 0; a < spec.N; ++a) {
    dist = std::min(dist, seed_point(a) - cfg->lambda.lo(a));
    dist = std::min(dist, cfg->lambda.hi(a) - seed_point(a));
  }
  if (beta * dist / eps < 5.0)
    throw ConfigError(
        "eps too large for Lambda: the profile width does not fit "
        "(beta*dist/eps = " +
        std::to_string(beta * dist / eps) + " < 5)");

  ScaledProfile sp =
      scaled_profile(Vec(seed_point / eps), eps, profile, spec.V, spec.J);
  GridFunction seed =
      sample(spec.grid, [&](const Vec& x) { return sp.eval_physical(x); });

  DiscreteFunctional f(spec.grid, eps, spec, EnergyModel::penalized(cfg));
  double t = nehari_scale(seed, f);
  SolveReport rep = nehari_minimize(t * seed, f, opts);
  if (rep.converged && rep.grad_max > opts.newton_tol) {
    SolveReport polished = newton_refine(rep.u, f, opts);
    if (polished.converged) {
      polished.iterations += rep.iterations;
      polished.wall_seconds += rep.wall_seconds;
      rep = polished;
    }
  }
  return rep;
}

std::vector<DistinctSolution> multi_start(
    const std::vector<Vec>& seed_points, double eps, const ProblemSpec& spec,
    std::shared_ptr<const PenaltyConfig> cfg,
    std::shared_ptr<const RadialProfile> profile, const SolverOptions& opts,
    double barycenter_radius) {
  if (seed_points.empty())
    throw ConfigError("multi_start needs at least one seed point");

  std::vector<SolveReport> reports(seed_points.size());
  std::vector<bool> ok(seed_points.size(), false);
  for (size_t i = 0; i < seed_points.size(); ++i) {
    try {
      reports[i] =
          solve_concentrating(eps, spec, cfg, profile, seed_points[i], opts);
      ok[i] = reports[i].converged;
      if (!ok[i])
        std::fprintf(stderr,
                     "[concentra] multi_start: seed %s did not converge; "
                     "skipped\n",
                     format_point(seed_points[i]).c_str());
    } catch (const Error& e) {
      std::fprintf(stderr, "[concentra] multi_start: seed %s failed: %s\n",
                   format_point(seed_points[i]).c_str(), e.what());
    }
  }

  std::vector<DistinctSolution> distinct;
  double h = spec.grid->h;
  for (size_t i = 0; i < reports.size(); ++i) {
    if (!ok[i]) continue;
    Vec b = barycenter(reports[i].u, barycenter_radius);
    bool dup = false;
    for (auto& d : distinct) {
      double erel = std::abs(d.report.energy - reports[i].energy) /
                    std::max(std::abs(d.report.energy), 1e-300);
      if (erel < 1e-6 && (d.barycenter - b).norm() < 2.0 * h) {
        dup = true;
        break;
      }
    }
    if (dup) continue;
    DistinctSolution s;
    s.report = reports[i];
    s.barycenter = b;
    s.seed_point = seed_points[i];
    distinct.push_back(std::move(s));
  }
  std::sort(distinct.begin(), distinct.end(),
            [](const DistinctSolution& a, const DistinctSolution& b) {
              return a.report.energy < b.report.energy;
            });
  return distinct;
}

}  // namespace concentra
