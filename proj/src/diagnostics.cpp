#include "concentra/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace concentra {

MaxPoint global_max_point(const GridFunction& u) {
  const GridDomain& d = *u.dom;
  if (u.max_abs() == 0.0)
    throw DomainError("global_max_point needs a nonzero function");
  long best = 0;
  double peak = u.v[0];
  bool unique = true;
  for (long i = 1; i < u.size(); ++i) {
    if (u.v[i] > peak) {
      peak = u.v[i];
      best = i;
      unique = true;
    } else if (u.v[i] == peak) {
      unique = false;  // lexicographically smallest index wins
    }
  }
  // per-axis quadratic fit through the 3-point stencil
  Vec x = d.node_point(best);
  long rem = best;
  long mi[3] = {0, 0, 0};
  for (int a = d.N - 1; a >= 0; --a) {
    mi[a] = rem % d.m();
    rem /= d.m();
  }
  long strides[3] = {1, 1, 1};
  for (int a = d.N - 2; a >= 0; --a) strides[a] = strides[a + 1] * d.m();
  for (int a = 0; a < d.N; ++a) {
    if (mi[a] == 0 || mi[a] == d.m() - 1) continue;
    double um = u.v[best - strides[a]];
    double up = u.v[best + strides[a]];
    double denom = um - 2.0 * peak + up;
    if (denom < 0.0) x(a) += 0.5 * d.h * (um - up) / denom;
  }
  MaxPoint out;
  out.x = x;
  out.peak = peak;
  out.unique = unique;
  return out;
}

std::pair<double, double> lambda_gamma_gap(const ProblemSpec& spec,
                                           const Box& lambda,
                                           int samples_per_axis) {
  const int m = std::max(samples_per_axis, 5);
  const int dim = lambda.dim();
  long total = 1;
  for (int i = 0; i < dim; ++i) total *= m;
  double interior_min = 1e300, boundary_min = 1e300;
  for (long flat = 0; flat < total; ++flat) {
    long rem = flat;
    Vec z(dim);
    bool on_boundary = false;
    for (int a = dim - 1; a >= 0; --a) {
      long idx = rem % m;
      rem /= m;
      z(a) = lambda.lo(a) + (lambda.hi(a) - lambda.lo(a)) * idx / double(m - 1);
      if (idx == 0 || idx == m - 1) on_boundary = true;
    }
    double g = gamma_eval(z, spec.V, spec.J, spec.N, spec.p).gamma;
    if (on_boundary)
      boundary_min = std::min(boundary_min, g);
    else
      interior_min = std::min(interior_min, g);
  }
  return {interior_min, boundary_min};
}

ConcentrationSeries concentration_series(
    const ProblemSpec& spec, std::shared_ptr<const PenaltyConfig> cfg,
    std::shared_ptr<const RadialProfile> profile, double eps0, int levels,
    const Vec& seed_point, const SolverOptions& opts) {
  if (levels < 3) throw ConfigError("concentration series needs >= 3 levels");
  if (!cfg) throw ConfigError("concentration series needs a PenaltyConfig");
  auto [gmin_in, gmin_bd] = lambda_gamma_gap(spec, cfg->lambda);
  if (!(gmin_in < gmin_bd))
    throw ConfigError(
        "penalization hypothesis fails: min_Lambda Gamma is not below the "
        "boundary minimum");

  ConcentrationSeries series;
  series.seed_point = seed_point;
  series.gamma_min_lambda = gmin_in;
  series.sigma_at_seed =
      sigma_closed_form(seed_point, *profile, spec.V, spec.J, spec.N);

  for (int j = 0; j < levels; ++j) {
    double eps = eps0 * std::pow(2.0, -j);
    ConcentrationRecord rec;
    rec.eps = eps;
    SolveReport rep;
    try {
      rep = solve_concentrating(eps, spec, cfg, profile, seed_point, opts);
    } catch (const Error& e) {
      std::fprintf(stderr,
                   "[concentra] concentration series truncated at eps = %g: "
                   "%s\n",
                   eps, e.what());
      series.truncated = true;
      series.records.push_back(rec);  // warning record, converged = false
      break;
    }
    rec.converged = rep.converged;
    if (!rep.converged) {
      std::fprintf(stderr,
                   "[concentra] concentration series truncated at eps = %g: "
                   "solver did not converge\n",
                   eps);
      series.truncated = true;
      series.records.push_back(rec);
      break;
    }
    MaxPoint mp = global_max_point(rep.u);
    rec.x_eps = mp.x;
    rec.peak = mp.peak;
    rec.gamma_at_x = gamma_eval(mp.x, spec.V, spec.J, spec.N, spec.p).gamma;
    double scale = std::pow(eps, -double(spec.N));
    rec.scaled_energy = scale * rep.energy;
    auto [ok, mext] = exterior_bound_check(rep.u, *cfg);
    rec.exterior_ok = ok;
    rec.max_exterior = mext;
    series.records.push_back(rec);
  }
  return series;
}

namespace {

// C^1 plateau: 1 for r <= r0, 0 for r >= r1, cubic smoothstep between.
double plateau(double r, double r0, double r1) {
  if (r <= r0) return 1.0;
  if (r >= r1) return 0.0;
  double s = (r - r0) / (r1 - r0);
  return 1.0 - s * s * (3.0 - 2.0 * s);
}

double plateau_deriv(double r, double r0, double r1) {
  if (r <= r0 || r >= r1) return 0.0;
  double s = (r - r0) / (r1 - r0);
  return -6.0 * s * (1.0 - s) / (r1 - r0);
}

}  // namespace

PucciSerrinResult pucci_serrin_residual(const GridFunction& u, double eps,
                                        const ProblemSpec& spec, int axis,
                                        const Vec& x0, double r_inner,
                                        double r_cut) {
  const GridDomain& d = *u.dom;
  if (axis < 0 || axis >= d.N)
    throw ConfigError("pucci_serrin_residual: axis out of range");
  if (!(r_inner > 0) || !(r_cut > r_inner))
    throw ConfigError("pucci_serrin_residual needs 0 < r_inner < r_cut");

  PucciSerrinResult out;
  // support check: u below 1e-6 peak outside the support of h
  double peak = u.max_abs();
  for (long i = 0; i < u.size(); ++i) {
    if ((d.node_point(i) - x0).norm() > r_cut &&
        std::abs(u.v[i]) > 1e-6 * peak) {
      out.support_ok = false;
      break;
    }
  }

  const double epsq = eps * eps;
  const double p = spec.p;
  const int corners = 1 << d.N;
  long c[3] = {0, 0, 0};
  const long ncell = d.n - 1;
  double us[8], du[3];
  long idx[8];
  KahanSum acc;
  for (long flat = 0; flat < d.cells; ++flat) {
    long j[3];
    for (int s = 0; s < corners; ++s) {
      for (int a = 0; a < d.N; ++a) j[a] = c[a] + ((s >> a) & 1);
      idx[s] = d.interior_index(j);
    }
    // cell center
    Vec x(d.N);
    for (int a = 0; a < d.N; ++a) x(a) = d.coord(c[a]) + 0.5 * d.h;

    double r = (x - x0).norm();
    double eta = plateau(r, r_inner, r_cut);
    double deta = plateau_deriv(r, r_inner, r_cut);
    if (eta == 0.0 && deta == 0.0) {
      for (int a = d.N - 1; a >= 0; --a) {
        if (++c[a] < ncell) break;
        c[a] = 0;
      }
      continue;
    }

    for (int s = 0; s < corners; ++s) us[s] = idx[s] >= 0 ? u.v[idx[s]] : 0.0;
    double uc = 0.0;
    for (int s = 0; s < corners; ++s) uc += us[s];
    uc /= corners;
    for (int a = 0; a < d.N; ++a) {
      double s2 = 0.0;
      for (int s = 0; s < corners; ++s)
        s2 += ((s >> a) & 1) ? us[s] : -us[s];
      du[a] = s2 * (2.0 / corners) / d.h;
    }

    Mat J = spec.J.value(x);
    double V = spec.V.value(x);
    Vec gradV = spec.V.grad(x);
    Vec Jdu(d.N);
    for (int i = 0; i < d.N; ++i) {
      double s2 = 0.0;
      for (int k = 0; k < d.N; ++k) s2 += J(i, k) * du[k];
      Jdu(i) = s2;
    }
    double JduDu = 0.0;
    for (int i = 0; i < d.N; ++i) JduDu += Jdu(i) * du[i];
    double F = uc > 0.0 ? std::pow(uc, p + 1.0) / (p + 1.0) : 0.0;
    double Lval = 0.5 * epsq * JduDu + 0.5 * V * uc * uc - F;

    // h^k = delta_{k,axis} eta(|x-x0|); d_i h^axis = deta * (x-x0)_i / r
    Vec grad_eta = Vec::Zero(d.N);
    if (r > 0 && deta != 0.0) grad_eta = deta / r * (x - x0);

    // sum_i d_i h^axis * dL/dxi_i * d_axis u
    double term1 = 0.0;
    for (int i = 0; i < d.N; ++i)
      term1 += grad_eta(i) * epsq * Jdu(i) * du[axis];
    // (div h) L = d_axis eta * L
    double term2 = grad_eta(axis) * Lval;
    // h . dL/dx = eta * (eps^2/2 <d_axis J du, du> + 1/2 d_axis V u^2)
    Mat dJ = spec.J.deriv(x, axis);
    double dJduDu = 0.0;
    for (int i = 0; i < d.N; ++i)
      for (int k = 0; k < d.N; ++k) dJduDu += du[i] * dJ(i, k) * du[k];
    double term3 = eta * (0.5 * epsq * dJduDu + 0.5 * gradV(axis) * uc * uc);

    acc.add(term1 - term2 - term3);
    for (int a = d.N - 1; a >= 0; --a) {
      if (++c[a] < ncell) break;
      c[a] = 0;
    }
  }
  out.residual = std::abs(acc.value() * d.cell_volume());
  return out;
}

Vec concentration_gradient_test(const GridFunction& u_eps, double eps,
                                const Vec& z0, const ProblemSpec& spec) {
  const GridDomain& d = *u_eps.dom;
  // window in the rescaled frame: as wide as the domain allows, capped at
  // the decayed-profile radius
  double avail = 1e300;
  for (int a = 0; a < d.N; ++a) {
    avail = std::min(avail, d.L - std::abs(z0(a)));
  }
  if (!(avail > 0))
    throw DomainError("concentration_gradient_test: z0 outside the domain");
  double beta = std::sqrt(spec.V.value(z0));
  double want = 25.0 / beta;
  double Lw = std::min(avail / eps, want);
  if (Lw * beta < 8.0)
    throw DomainError(
        "concentration_gradient_test: rescaling window leaves the domain");

  GridPtr fresh = build_grid(d.N, Lw, d.n);
  // multilinear resample of u_eps at z0 + eps*y
  auto interp = [&](const Vec& x) -> double {
    double w[3], acc = 0.0;
    long base[3];
    for (int a = 0; a < d.N; ++a) {
      double t = (x(a) + d.L) / d.h;
      double fl = std::floor(t);
      base[a] = static_cast<long>(fl);
      w[a] = t - fl;
      if (base[a] < 0 || base[a] >= d.n - 1) return 0.0;
    }
    int corners = 1 << d.N;
    for (int s = 0; s < corners; ++s) {
      double weight = 1.0;
      long j[3];
      for (int a = 0; a < d.N; ++a) {
        int bit = (s >> a) & 1;
        weight *= bit ? w[a] : 1.0 - w[a];
        j[a] = base[a] + bit;
      }
      long ii = d.interior_index(j);
      acc += weight * (ii >= 0 ? u_eps.v[ii] : 0.0);
    }
    return acc;
  };
  GridFunction w = sample(fresh, [&](const Vec& y) {
    return interp(Vec(z0 + eps * y));
  });

  // identity integrals with coefficients frozen at z0
  Vec out(d.N);
  Vec gradV = spec.V.grad(z0);
  const GridDomain& fd = *fresh;
  const int corners = 1 << fd.N;
  for (int i = 0; i < d.N; ++i) {
    Mat dJ = spec.J.deriv(z0, i);
    KahanSum s;
    long c[3] = {0, 0, 0};
    const long ncell = fd.n - 1;
    double us[8], du[3];
    long idx[8];
    for (long flat = 0; flat < fd.cells; ++flat) {
      long j[3];
      for (int sc = 0; sc < corners; ++sc) {
        for (int a = 0; a < fd.N; ++a) j[a] = c[a] + ((sc >> a) & 1);
        idx[sc] = fd.interior_index(j);
      }
      for (int sc = 0; sc < corners; ++sc)
        us[sc] = idx[sc] >= 0 ? w.v[idx[sc]] : 0.0;
      double uc = 0.0;
      for (int sc = 0; sc < corners; ++sc) uc += us[sc];
      uc /= corners;
      for (int a = 0; a < fd.N; ++a) {
        double s2 = 0.0;
        for (int sc = 0; sc < corners; ++sc)
          s2 += ((sc >> a) & 1) ? us[sc] : -us[sc];
        du[a] = s2 * (2.0 / corners) / fd.h;
      }
      double quad = 0.0;
      for (int a = 0; a < fd.N; ++a)
        for (int b = 0; b < fd.N; ++b) quad += du[a] * dJ(a, b) * du[b];
      s.add(0.5 * quad + 0.5 * gradV(i) * uc * uc);
      for (int a = fd.N - 1; a >= 0; --a) {
        if (++c[a] < ncell) break;
        c[a] = 0;
      }
    }
    out(i) = s.value() * fd.cell_volume();
  }
  return out;
}

Vec barycenter(const GridFunction& u, double R) {
  const GridDomain& d = *u.dom;
  if (!(R > 0)) throw ConfigError("barycenter needs R > 0");
  KahanSum mass;
  std::vector<KahanSum> moment(d.N);
  for (long i = 0; i < u.size(); ++i) {
    double w = u.v[i] * u.v[i];
    if (w == 0.0) continue;
    Vec x = d.node_point(i);
    double r = x.norm();
    Vec chi = r <= R ? x : Vec(R / r * x);
    mass.add(w);
    for (int a = 0; a < d.N; ++a) moment[a].add(chi(a) * w);
  }
  if (!(mass.value() > 0.0))
    throw DomainError("barycenter needs a function with positive mass");
  Vec out(d.N);
  for (int a = 0; a < d.N; ++a) out(a) = moment[a].value() / mass.value();
  return out;
}

std::pair<bool, double> exterior_bound_check(const GridFunction& u,
                                             const PenaltyConfig& cfg) {
  const GridDomain& d = *u.dom;
  double mext = 0.0;
  for (long i = 0; i < u.size(); ++i) {
    if (!cfg.inside(d.node_point(i))) mext = std::max(mext, u.v[i]);
  }
  return {mext <= cfg.ell * (1.0 + 1e-6), mext};
}

}  // namespace concentra
