// Test-only oracle: independent collocation/relaxation solve of the
// radial BVP
//   -U'' - (N-1)/r U' + U = U^p,  U'(0) = 0,  U(R) = 0
// on a uniform grid. A Nehari-rescaled semi-implicit relaxation brings a
// generic bump into the ground-state basin, then damped Newton with a
// tridiagonal Jacobian polishes the discrete root; results are
// Richardson-extrapolated. Independent of the shooting implementation it
// cross-checks.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace radial_oracle {

struct BvpSolution {
  std::vector<double> U;
  double h = 0.0;
  int N = 0;
  double p = 0.0;
};

namespace detail {

// Thomas solve of a tridiagonal system (dl, dd, du) x = rhs.
inline void tridiag(const std::vector<double>& dl, const std::vector<double>& dd,
                    const std::vector<double>& du, const std::vector<double>& rhs,
                    std::vector<double>& x) {
  const long M = static_cast<long>(dd.size());
  std::vector<double> c(M), d(M);
  c[0] = du[0] / dd[0];
  d[0] = rhs[0] / dd[0];
  for (long i = 1; i < M; ++i) {
    double m = dd[i] - dl[i] * c[i - 1];
    c[i] = du[i] / m;
    d[i] = (rhs[i] - dl[i] * d[i - 1]) / m;
  }
  x.resize(M);
  x[M - 1] = d[M - 1];
  for (long i = M - 2; i >= 0; --i) x[i] = d[i] - c[i] * x[i + 1];
}

inline void linear_rows(int N, double h, long M, double shift,
                        std::vector<double>& dl, std::vector<double>& dd,
                        std::vector<double>& du) {
  // rows of shift*I + (-Lap_h + I) with the symmetry condition at r = 0
  dl.assign(M, 0.0);
  dd.assign(M, 0.0);
  du.assign(M, 0.0);
  dd[0] = shift + 2.0 * N / (h * h) + 1.0;
  du[0] = -2.0 * N / (h * h);
  for (long i = 1; i < M; ++i) {
    double r = i * h;
    dd[i] = shift + 2.0 / (h * h) + 1.0;
    du[i] = -1.0 / (h * h) - (N - 1) / r / (2.0 * h);
    dl[i] = -1.0 / (h * h) + (N - 1) / r / (2.0 * h);
  }
}

inline double weighted_sum(const std::vector<double>& f, double h, int N) {
  double s = 0.0;
  for (size_t i = 0; i < f.size(); ++i) s += f[i] * std::pow(i * h, double(N - 1));
  return s * h;
}

}  // namespace detail

inline BvpSolution solve_once(int N, double p, double R, long M,
                              double seed_amp) {
  const double h = R / M;
  std::vector<double> U(M);
  for (long i = 0; i < M; ++i)
    U[i] = seed_amp * std::pow(1.0 / std::cosh(i * h), 2.0 / (p - 1.0));

  // Stage 1: semi-implicit flow U <- (I + dt(-Lap + I))^{-1}(U + dt U^p),
  // Nehari-rescaled each step so the iterate cannot collapse to zero.
  {
    const double dt = 0.25;
    std::vector<double> dl, dd, du, rhs(M), next;
    detail::linear_rows(N, h, M, 1.0 / dt, dl, dd, du);
    for (int step = 0; step < 600; ++step) {
      for (long i = 0; i < M; ++i)
        rhs[i] = U[i] / dt + (U[i] > 0 ? std::pow(U[i], p) : 0.0);
      detail::tridiag(dl, dd, du, rhs, next);
      // Nehari factor from the quadratic and power moments
      std::vector<double> q(M), pw(M);
      for (long i = 0; i < M; ++i) {
        double dU = (i + 1 < M ? next[i + 1] : 0.0) - (i > 0 ? next[i - 1] : next[1]);
        dU /= 2.0 * h;
        q[i] = dU * dU + next[i] * next[i];
        pw[i] = next[i] > 0 ? std::pow(next[i], p + 1.0) : 0.0;
      }
      double Q = detail::weighted_sum(q, h, N);
      double P = detail::weighted_sum(pw, h, N);
      if (!(P > 0)) throw std::runtime_error("radial BVP oracle: collapsed");
      double t = std::pow(Q / P, 1.0 / (p - 1.0));
      for (long i = 0; i < M; ++i) U[i] = t * next[i];
    }
  }

  // Stage 2: damped Newton on the residual.
  std::vector<double> F(M), dl(M), dd(M), du(M);
  auto residual = [&](const std::vector<double>& u, std::vector<double>& f) {
    for (long i = 0; i < M; ++i) {
      double r = i * h;
      double up = u[i] > 0 ? std::pow(u[i], p) : -std::pow(-u[i], p);
      if (i == 0) {
        f[0] = -2.0 * N * (u[1] - u[0]) / (h * h) + u[0] - up;
      } else {
        double right = i + 1 < M ? u[i + 1] : 0.0;
        double lap = (right - 2.0 * u[i] + u[i - 1]) / (h * h) +
                     (N - 1) / r * (right - u[i - 1]) / (2.0 * h);
        f[i] = -lap + u[i] - up;
      }
    }
  };
  auto norm2 = [](const std::vector<double>& f) {
    double s = 0;
    for (double x : f) s += x * x;
    return std::sqrt(s);
  };

  // cancellation noise floor of the residual evaluation
  double umax = 0.0;
  for (double x : U) umax = std::max(umax, std::abs(x));
  const double floor = 1e-15 * umax / (h * h) * std::sqrt(double(M));
  const double target = std::max(1e-11, 30.0 * floor);

  residual(U, F);
  double fn = norm2(F);
  for (int it = 0; it < 100 && fn > target; ++it) {
    detail::linear_rows(N, h, M, 0.0, dl, dd, du);
    for (long i = 0; i < M; ++i)
      dd[i] -= U[i] > 0 ? p * std::pow(U[i], p - 1.0) : 0.0;
    std::vector<double> rhs(M), dx;
    for (long i = 0; i < M; ++i) rhs[i] = -F[i];
    detail::tridiag(dl, dd, du, rhs, dx);

    double damp = 1.0;
    std::vector<double> trial(M), Ft(M);
    bool ok = false;
    for (int bt = 0; bt < 40; ++bt) {
      for (long i = 0; i < M; ++i) trial[i] = U[i] + damp * dx[i];
      residual(trial, Ft);
      double fn2 = norm2(Ft);
      if (fn2 < fn) {
        U = trial;
        F = Ft;
        fn = fn2;
        ok = true;
        break;
      }
      damp *= 0.5;
    }
    if (!ok) break;
  }
  if (fn > 50.0 * target)
    throw std::runtime_error("radial BVP oracle: no convergence");
  BvpSolution sol;
  sol.U = U;
  sol.h = h;
  sol.N = N;
  sol.p = p;
  return sol;
}

inline double moment(const BvpSolution& s) {
  // integral of U^{p+1} r^{N-1} (Simpson), times the sphere area
  const double area = s.N == 1 ? 2.0 : (s.N == 2 ? 2 * M_PI : 4 * M_PI);
  std::vector<double> f(s.U.size() + 1, 0.0);
  for (size_t i = 0; i < s.U.size(); ++i)
    f[i] = std::pow(s.U[i], s.p + 1.0) * std::pow(i * s.h, double(s.N - 1));
  double acc = 0.0;
  size_t n = f.size();
  size_t last = (n % 2 == 1) ? n - 1 : n - 2;
  for (size_t i = 0; i + 2 <= last; i += 2)
    acc += (f[i] + 4 * f[i + 1] + f[i + 2]) * s.h / 3.0;
  if (n % 2 == 0) acc += 0.5 * s.h * (f[n - 2] + f[n - 1]);
  return area * acc;
}

/// Richardson-extrapolated U(0) and C0.
inline std::pair<double, double> ground_state(int N, double p, double R,
                                              double seed_amp) {
  BvpSolution a = solve_once(N, p, R, 8000, seed_amp);
  BvpSolution b = solve_once(N, p, R, 16000, seed_amp);
  double u0 = (4.0 * b.U[0] - a.U[0]) / 3.0;
  double c0 = (4.0 * moment(b) - moment(a)) / 3.0;
  return {u0, c0};
}

}  // namespace radial_oracle
