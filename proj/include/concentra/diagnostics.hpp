#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "concentra/common.hpp"
#include "concentra/discretization.hpp"
#include "concentra/limit_profile.hpp"
#include "concentra/solvers.hpp"

namespace concentra {

struct MaxPoint {
  Vec x;
  double peak = 0.0;
  bool unique = true;
};

/// Argmax over nodes (ties resolved to the lexicographically smallest
/// index and flagged non-unique), refined per axis by a quadratic fit
/// through the 3-point stencil.
MaxPoint global_max_point(const GridFunction& u);

/// One record of a concentration sweep.
struct ConcentrationRecord {
  double eps = 0.0;
  Vec x_eps;
  double gamma_at_x = 0.0;
  double scaled_energy = 0.0;  // eps^{-N} E^eps(u_eps)
  double peak = 0.0;
  bool exterior_ok = false;
  double max_exterior = 0.0;
  bool converged = false;
};

struct ConcentrationSeries {
  std::vector<ConcentrationRecord> records;
  Vec seed_point;
  double gamma_min_lambda = 0.0;  // min over Lambda of Gamma (numeric)
  double sigma_at_seed = 0.0;     // sigma_closed_form at the seed point
  bool truncated = false;         // a level failed to converge
};

/// Runs solve_concentrating over eps_j = eps0 2^{-j}. Verifies the
/// penalization hypothesis min_Lambda Gamma < min_{boundary} Gamma
/// numerically before starting; truncates the series with a warning
/// record when a level fails.
ConcentrationSeries concentration_series(
    const ProblemSpec& spec, std::shared_ptr<const PenaltyConfig> cfg,
    std::shared_ptr<const RadialProfile> profile, double eps0, int levels,
    const Vec& seed_point, const SolverOptions& opts);

/// Checks min_Lambda Gamma < min_{dLambda} Gamma on a sampling lattice;
/// returns {interior min, boundary min}.
std::pair<double, double> lambda_gamma_gap(const ProblemSpec& spec,
                                           const Box& lambda,
                                           int samples_per_axis = 41);

/// Pucci-Serrin residual for L = eps^2/2 <J grad u, grad u> + V u^2/2 - F(u)
/// with a plateau field h = eta(|x-x0|) e_axis (1 inside R_inner, 0 outside
/// R_cut, cubic ramp between). Returns |LHS| of the identity; a support
/// violation only attaches a warning.
struct PucciSerrinResult {
  double residual = 0.0;
  bool support_ok = true;
};
PucciSerrinResult pucci_serrin_residual(const GridFunction& u, double eps,
                                        const ProblemSpec& spec, int axis,
                                        const Vec& x0, double r_inner,
                                        double r_cut);

/// Rescales w(y) = u(z0 + eps y) onto a fresh grid of the same node count
/// and evaluates the limit-identity integrals
///   1/2 int <d_i J(z0) grad w, grad w> + 1/2 d_i V(z0) w^2,  i = 1..N.
/// Near-zero output certifies grad Gamma(z0) ~ 0.
Vec concentration_gradient_test(const GridFunction& u_eps, double eps,
                                const Vec& z0, const ProblemSpec& spec);

/// Truncated first moment of |u|^2: chi(x) = x for |x| <= R, R x/|x| out.
Vec barycenter(const GridFunction& u, double R);

/// Max of u outside Lambda; ok when max <= ell (1 + 1e-6).
std::pair<bool, double> exterior_bound_check(const GridFunction& u,
                                             const PenaltyConfig& cfg);

}  // namespace concentra
