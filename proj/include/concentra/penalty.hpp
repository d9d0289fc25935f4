#pragma once

#include <functional>
#include <memory>

#include "concentra/common.hpp"

namespace concentra {

/// del Pino-Felmer penalization data for f(u) = (u^+)^p: the threshold l
/// with f(l)/l = alpha/k, the cut nonlinearity outside Lambda and its
/// primitive. Validated on construction.
struct PenaltyConfig {
  Box lambda;
  double p = 0.0;
  double alpha = 0.0;
  double k = 0.0;      // k > theta/(theta-2)
  double theta = 0.0;  // theta in (2, p+1)
  double ell = 0.0;    // f(ell)/ell = alpha/k

  bool inside(const Vec& x) const { return lambda.contains(x); }

  // Scalar nonlinearity g(x,u) split by region; continuous in u, G is C^1.
  double g_in(double u) const;    // f(u) = (u^+)^p
  double G_in(double u) const;
  double gp_in(double u) const;   // f'(u) = p (u^+)^{p-1}
  double g_out(double u) const;   // f~ : linear cut above ell
  double G_out(double u) const;
  double gp_out(double u) const;  // one-sided from below at the kink
};

/// Default theta = (p+3)/2, k = 2 theta/(theta-2).
double default_theta(double p);
double default_k(double theta);

/// Builds and validates a PenaltyConfig for the power nonlinearity.
std::shared_ptr<const PenaltyConfig> make_penalty(const Box& lambda, double p,
                                                  double alpha,
                                                  double k = 0.0,
                                                  double theta = 0.0);

/// Threshold for the power nonlinearity: ell = (alpha/k)^{1/(p-1)}.
double penalty_threshold(double p, double alpha, double k);

/// Threshold for a general monotone f: bisection on f(u)/u = alpha/k with
/// the bracket's upper end doubled until a sign change appears. Throws
/// SolverError when no sign change exists up to the cap ((f4) violated).
double penalty_threshold(const std::function<double(double)>& f, double alpha,
                         double k, double u_cap = 1e12);

/// The triple (g, G, g') at (x, u); spec-level surface over the scalar
/// helpers above.
struct PenalizedValue {
  double g = 0.0;
  double G = 0.0;
  double gp = 0.0;
};
PenalizedValue penalized_nonlinearity(const Vec& x, double u,
                                      const PenaltyConfig& cfg);

}  // namespace concentra
