#pragma once

#include <memory>
#include <string>

#include "concentra/common.hpp"
#include "concentra/discretization.hpp"
#include "concentra/fields.hpp"
#include "concentra/solvers.hpp"

namespace concentra {

/// Radial ground state of -Lap U + U = U^p: uniform samples of U and U'
/// up to rmax, with the moment C0 = integral of U^{p+1} over R^N.
/// Evaluation uses cubic Hermite interpolation (U' is stored) and the
/// matched tail c r^{-(N-1)/2} e^{-r} beyond the splice radius.
struct RadialProfile {
  int N = 0;
  double p = 0.0;
  double hr = 0.0;
  double rmax = 0.0;
  std::vector<double> r, U, dU;
  double U0 = 0.0;
  double C0 = 0.0;
  double tail_coeff = 0.0;
  double tail_start = 0.0;

  double value(double rr) const;
  double deriv(double rr) const;
  /// Recomputes C0 with the tail spliced at a different radius; used by
  /// the splice-invariance check.
  double moment_with_splice(double splice_radius) const;
};

/// Shooting solver with bisection on U(0). The bracket is searched in
/// [1, 10]; overshoot means U crosses zero, undershoot means U' turns
/// positive while U > 0. Stops when the U(0)-bracket is <= tol.
/// hr_override = 0 keeps the default step 1e-3 * rmax.
RadialProfile solve_radial_ground_state(int N, double p, double tol,
                                        double rmax = 20.0,
                                        double hr_override = 0.0);

void save_radial_profile(const RadialProfile& prof, const std::string& path,
                         const std::vector<std::string>& preamble = {});
RadialProfile load_radial_profile(const std::string& path);

/// The explicit profile alpha(s) U(beta(s) |T^t (x - xi)|) with s = eps*xi,
/// alpha = V(s)^{1/(p-1)}, beta = V(s)^{1/2} and T the diagonalizing
/// transform at s. |T^t y| equals sqrt(y^t J(s)^{-1} y), so the profile
/// solves the frozen equation at s exactly.
struct ScaledProfile {
  Vec xi;
  double eps = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  Mat chol_L;  // lower Cholesky factor of J(eps xi)
  std::shared_ptr<const RadialProfile> profile;

  /// Metric radius sqrt((x-xi)^t J^{-1} (x-xi)).
  double radius(const Vec& x) const;
  /// Value in the rescaled frame (the frame where the center is xi).
  double eval(const Vec& x) const;
  /// Value in physical coordinates: eval(x/eps).
  double eval_physical(const Vec& x) const;
};

ScaledProfile scaled_profile(const Vec& xi, double eps,
                             std::shared_ptr<const RadialProfile> profile,
                             const PotentialField& V, const DiffusionField& J);

/// Sigma(z) = C1 * Gamma(z) with C1 = C0 (1/2 - 1/(p+1)).
double sigma_c1(const RadialProfile& profile);
double sigma_closed_form(const Vec& z, const RadialProfile& profile,
                         const PotentialField& V, const DiffusionField& J,
                         int N);

/// Discrete minimizer of the frozen functional I_z on its Nehari manifold.
struct FrozenGroundState {
  Vec z;
  GridFunction u;
  double sigma = 0.0;          // I_z at the minimizer
  double nehari_residual = 0.0;  // |D I_z(u)[u]|
  SolveReport report;
};

FrozenGroundState frozen_sigma_numeric(
    const Vec& z, GridPtr grid, std::shared_ptr<const RadialProfile> profile,
    const ProblemSpec& spec, const SolverOptions& opts = {});

/// Directional derivative of Sigma at z along axis i, evaluated with the
/// computed ground state v:
///   1/2 int <dJ/ds_i grad v, grad v> + 1/2 dV/ds_i int v^2.
/// Equals the two-sided derivative when the ground state is unique.
double sigma_directional_derivative(const Vec& z, int axis,
                                    const FrozenGroundState& state,
                                    const ProblemSpec& spec);

}  // namespace concentra
