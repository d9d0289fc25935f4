#pragma once

#include <memory>
#include <vector>

#include "concentra/common.hpp"
#include "concentra/discretization.hpp"
#include "concentra/limit_profile.hpp"
#include "concentra/solvers.hpp"

namespace concentra {

struct ReductionOptions {
  double tol = 1e-8;          // correction update tolerance (H1 mesh norm)
  int max_iterations = 100;
  int minres_max_iterations = 600;
  double minres_rtol = 1e-10;
  double h_xi = 1e-3;         // FD step for the reduced gradient
  double newton_tol = 1e-4;   // |grad Phi| target in the xi-Newton
  int newton_max_steps = 30;
  double hess_step = 5e-2;    // FD step for the reduced Hessian
  double eps_max = 0.5;       // correction solves refuse larger eps
  double gram_cond_max = 1e8;
  bool verbose = false;
};

/// One sample of the reduced landscape.
struct ReducedSample {
  Vec xi;
  double w_norm = 0.0;       // H1-type mesh norm of the correction
  double phi = 0.0;          // Phi_eps(xi) = f_eps(z_xi + w)
  Vec grad_phi;              // centered FD in xi (empty until computed)
  long iterations = 0;
  double residual = 0.0;     // |P grad f_eps(z_xi + w)| (mesh L2)
  GridFunction w;            // the correction itself
};

struct ReducedCritical {
  Vec xi_star;
  ReducedSample sample;
  SolveReport full_solution;  // z_xi* + w polished on the unreduced energy
};

/// Lyapunov-Schmidt reduction at fixed eps: the rescaled functional
/// f_eps (coefficients at eps x), the profile manifold tangent basis,
/// the correction by contraction, and the reduced landscape.
class Reduction {
 public:
  Reduction(double eps, const ProblemSpec& spec,
            std::shared_ptr<const RadialProfile> profile,
            const ReductionOptions& opts = {});

  /// z_xi sampled on the grid.
  GridFunction profile_at(const Vec& xi) const;

  /// Analytic d z_xi / d xi_i, discretized; the Gram matrix must be
  /// well-conditioned or a degenerate-basis error is thrown.
  std::vector<GridFunction> tangent_basis(const Vec& xi) const;

  /// Mesh-L2 orthogonal projector onto the tangent complement.
  GridFunction project(const std::vector<GridFunction>& basis,
                       const GridFunction& v) const;

  /// Fixed-point correction w with grad f_eps(z_xi + w) in the tangent
  /// span: projected MINRES solves of the linearization frozen at z_xi.
  ReducedSample solve_correction(const Vec& xi) const;

  /// solve_correction plus the reduced gradient by centered differences
  /// (the correction is re-solved at every stencil point).
  ReducedSample reduced_energy(const Vec& xi) const;

  /// Newton search on grad Phi_eps seeded at (1/eps) * (critical points
  /// of Gamma inside the image of xi_box); each converged xi* is
  /// assembled into a full solution and polished on the unreduced
  /// functional.
  std::vector<ReducedCritical> reduced_critical_points(
      const Box& xi_box, int coarse_grid, double gamma_tol,
      const SolverOptions& solver_opts) const;

  const DiscreteFunctional& functional() const { return f_; }
  double eps() const { return eps_; }

 private:
  double phi_only(const Vec& xi) const;

  double eps_;
  ProblemSpec spec_;
  std::shared_ptr<const RadialProfile> profile_;
  ReductionOptions opts_;
  DiscreteFunctional f_;
};

// Spec-level free functions (each builds a Reduction internally).
std::vector<GridFunction> tangent_basis(
    const Vec& xi, double eps, const ProblemSpec& spec,
    std::shared_ptr<const RadialProfile> profile);
ReducedSample solve_correction(const Vec& xi, double eps,
                               const ProblemSpec& spec,
                               std::shared_ptr<const RadialProfile> profile,
                               double tol);
ReducedSample reduced_energy(const Vec& xi, double eps,
                             const ProblemSpec& spec,
                             std::shared_ptr<const RadialProfile> profile);

}  // namespace concentra
