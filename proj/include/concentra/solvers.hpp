#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "concentra/common.hpp"
#include "concentra/discretization.hpp"

namespace concentra {

struct RadialProfile;

struct SolverOptions {
  double nehari_tol = 1e-5;    // gradient max-norm target for the descent
  double newton_tol = 1e-9;    // gradient max-norm target for Newton
  double newton_entry = 1e-2;  // Newton refuses seeds rougher than this
  long max_iterations = 10000;
  int newton_max_steps = 50;
  int minres_max_iterations = 400;
  double minres_rtol = 1e-8;
  int path_nodes = 32;           // mountain-pass path resolution K
  int path_max_sweeps = 2000;
  bool verbose = false;
};

/// Outcome of a critical-point solve.
struct SolveReport {
  GridFunction u;
  double energy = 0.0;
  double grad_max = 0.0;        // discrete Euler-Lagrange residual, max norm
  double nehari_residual = 0.0; // |DE(u)[u]|
  long iterations = 0;
  bool converged = false;
  double wall_seconds = 0.0;    // diagnostics only; never written to data files
};

/// Mountain-pass deformation result.
struct MountainPassReport {
  std::vector<GridFunction> path;  // gamma(t_i), t_i uniform in [0,1]
  double level = 0.0;              // stabilized max_i E(gamma(t_i))
  double endpoint_energy = 0.0;    // E(gamma(1)) < 0
  long sweeps = 0;
  std::vector<double> level_history;  // non-increasing by construction
};

/// Unique positive multiplier t with t*u on the Nehari manifold of the
/// given energy: closed form (Q/P)^{1/(p-1)} for the pure power modes,
/// monotone bisection on dE(tu)[u] = 0 in penalized mode.
double nehari_scale(const GridFunction& u, const DiscreteFunctional& f);
double nehari_scale(const GridFunction& u, double eps, const ProblemSpec& spec,
                    const EnergyModel& model);

/// Projected descent: Armijo-backtracked gradient steps alternated with
/// Nehari re-projection. Converged when the gradient max-norm of the
/// unconstrained energy drops below tol.
SolveReport nehari_minimize(const GridFunction& seed,
                            const DiscreteFunctional& f,
                            const SolverOptions& opts);
SolveReport nehari_minimize(const GridFunction& seed, double eps,
                            const ProblemSpec& spec, const EnergyModel& model,
                            const SolverOptions& opts);

/// Path-deformation estimate of the mountain-pass level
///   inf_path max_t E(gamma(t)),  gamma(0) = 0, E(gamma(1)) < 0.
/// Interior nodes take perpendicular descent steps, the maximizer's
/// neighborhood is re-maximized along the polyline, and nodes are
/// redistributed by arclength. Stops when the level decreases by less
/// than 1e-6 relative over 10 sweeps.
MountainPassReport mountain_pass_level(const GridFunction& endpoint,
                                       const DiscreteFunctional& f,
                                       const SolverOptions& opts);

/// Damped Newton with a matrix-free MINRES inner solve (tolerant of the
/// indefinite Hessian at mountain-pass points). Steps are accepted only
/// if the gradient norm decreases.
SolveReport newton_refine(const GridFunction& u, const DiscreteFunctional& f,
                          const SolverOptions& opts);

/// Full concentrating-solution pipeline at one eps: scaled-profile seed at
/// seed_point, Nehari projection, penalized descent, Newton polish.
SolveReport solve_concentrating(double eps, const ProblemSpec& spec,
                                std::shared_ptr<const PenaltyConfig> cfg,
                                std::shared_ptr<const RadialProfile> profile,
                                const Vec& seed_point,
                                const SolverOptions& opts);

struct DistinctSolution {
  SolveReport report;
  Vec barycenter;
  Vec seed_point;
};

/// Runs solve_concentrating per seed and deduplicates: two solutions are
/// the same when energies agree to 1e-6 relative and barycenters are
/// closer than 2h. Failed seeds are logged and skipped.
std::vector<DistinctSolution> multi_start(
    const std::vector<Vec>& seed_points, double eps, const ProblemSpec& spec,
    std::shared_ptr<const PenaltyConfig> cfg,
    std::shared_ptr<const RadialProfile> profile, const SolverOptions& opts,
    double barycenter_radius);

/// Matrix-free MINRES for symmetric (possibly indefinite) operators.
/// Returns the iterate with the smallest residual seen.
struct MinresResult {
  GridFunction x;
  double rel_residual = 0.0;
  int iterations = 0;
  bool breakdown = false;
};
MinresResult minres(const std::function<GridFunction(const GridFunction&)>& A,
                    const GridFunction& b, int max_iterations, double rtol);

}  // namespace concentra
