#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "concentra/common.hpp"

namespace concentra {

/// Scalar coefficient V with analytic first derivatives. The Hessian is
/// optional; when absent, factories install a centered finite-difference
/// fallback with step 1e-5*(1+|z|).
struct PotentialField {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> grad;
  std::function<Mat(const Vec&)> hess;
  double alpha = 0.0;  // declared lower bound, V >= alpha > 0
};

/// Matrix coefficient J (symmetric, uniformly elliptic) with analytic
/// directional derivatives dJ/dz_i.
struct DiffusionField {
  std::function<Mat(const Vec&)> value;
  std::function<Mat(const Vec&, int)> deriv;  // dJ(z)/dz_i
  double nu = 0.0;     // declared ellipticity lower bound
  double upper = 0.0;  // declared upper bound on the largest eigenvalue
};

enum class CritKind { Minimum, Maximum, Saddle, Degenerate };

std::string to_string(CritKind k);

/// One sample of the concentration landscape.
struct LandscapeSample {
  Vec z;
  double gamma = 0.0;
  Vec grad;
  CritKind kind = CritKind::Degenerate;
};

/// Linear change of variables T with T^t J(z) T = I.
struct Transform {
  Mat T;
  Vec z;
  double det = 0.0;  // det T = (det J(z))^{-1/2}
};

/// Exponent (p+1)/(p-1) - N/2 entering the concentration function.
double gamma_exponent(int N, double p);

/// Evaluates Gamma(z) = V(z)^{(p+1)/(p-1)-N/2} (det J(z))^{1/2} together
/// with its gradient. The derivative of the determinant factor uses
/// Jacobi's formula d_i (det J)^{1/2} = (1/2)(det J)^{1/2} tr(J^{-1} d_i J).
/// Throws DomainError when V(z) <= 0 or J(z) fails to be symmetric
/// positive-definite.
LandscapeSample gamma_eval(const Vec& z, const PotentialField& V,
                           const DiffusionField& J, int N, double p);

struct CriticalPointOptions {
  int max_newton = 60;
  double fd_step_scale = 1e-4;       // Hessian step: scale*(1+|z|)
  double degeneracy_rel = 1e-6;      // |eig| < rel*|H| marks degenerate
  bool log_dropped = false;
};

/// Coarse grid scan over `box` followed by damped Newton on grad(Gamma).
/// Returns critical points with |grad| <= tol, deduplicated at distance
/// sqrt(tol) and classified by the finite-difference Hessian. A constant
/// landscape yields a single sample flagged Degenerate.
std::vector<LandscapeSample> find_gamma_critical_points(
    const Box& box, int coarse_grid, double tol, const PotentialField& V,
    const DiffusionField& J, int N, double p,
    const CriticalPointOptions& opts = {});

/// Cholesky-based diagonalizing transform: J = L L^t, T = L^{-t}.
/// Unique for SPD input, hence deterministic and smooth in J.
/// Throws DomainError on a non-positive pivot (ellipticity violation).
Transform diagonalizing_transform(const Mat& J_at_z);
Transform diagonalizing_transform(const Vec& z, const DiffusionField& J);

// --- built-in field families (configuration-file surface) ---------------

/// Named field family with numeric parameters; see FieldSpec::make_*.
struct FieldSpec {
  std::string family;
  std::map<std::string, std::vector<double>> params;
};

PotentialField make_potential(const FieldSpec& spec, int N);
/// `box` is needed by families whose declared bounds depend on the
/// computational domain (affine diagonal entries).
DiffusionField make_diffusion(const FieldSpec& spec, int N,
                              const std::optional<Box>& box = std::nullopt);

/// Finite-difference Hessian fallback for analytic-gradient fields.
Mat fd_hessian(const std::function<Vec(const Vec&)>& grad, const Vec& z);

}  // namespace concentra
