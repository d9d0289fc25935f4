#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "concentra/common.hpp"
#include "concentra/fields.hpp"
#include "concentra/penalty.hpp"

namespace concentra {

/// Uniform tensor grid on [-L,L]^N with homogeneous Dirichlet boundary.
/// Nodes per axis include the boundary; grid functions store interior
/// values only, enumerated lexicographically (axis 0 most significant).
struct GridDomain {
  int N = 0;
  double L = 0.0;
  int n = 0;        // nodes per axis, including boundary
  double h = 0.0;   // 2L/(n-1)
  long interior = 0;  // (n-2)^N
  long cells = 0;     // (n-1)^N

  int m() const { return n - 2; }
  double coord(long j) const { return -L + h * j; }  // node j in [0,n-1]
  double cell_volume() const;
  /// Interior flat index of the node with per-axis indices j in [1,n-2],
  /// or -1 when any index touches the boundary.
  long interior_index(const long* j) const;
  Vec node_point(long flat_interior) const;
};

using GridPtr = std::shared_ptr<const GridDomain>;

/// Builds a grid, checking n >= 8 and a memory cap before allocation.
GridPtr build_grid(int N, double L, int n, double memory_cap_bytes = 6e9);

/// Discrete candidate solution: interior nodal values, boundary = 0.
struct GridFunction {
  GridPtr dom;
  std::vector<double> v;

  GridFunction() = default;
  explicit GridFunction(GridPtr d) : dom(std::move(d)), v(dom->interior, 0.0) {}

  long size() const { return static_cast<long>(v.size()); }
  double max_abs() const;
  double max() const;
  double min() const;
  void check_finite(const char* where) const;
};

// Pointwise helpers (same domain assumed).
GridFunction operator+(const GridFunction& a, const GridFunction& b);
GridFunction operator-(const GridFunction& a, const GridFunction& b);
GridFunction operator*(double s, const GridFunction& a);
void axpy(double a, const GridFunction& x, GridFunction& y);  // y += a*x

/// Nodal mesh inner product h^N sum(u_i v_i); pairs with the Riesz
/// gradient returned by the functionals.
double dot_mesh(const GridFunction& a, const GridFunction& b);
double norm_mesh(const GridFunction& a);

/// Which energy is being discretized.
struct EnergyModel {
  enum class Kind { Raw, Frozen, Penalized, Rescaled } kind = Kind::Raw;
  Vec frozen_z;  // Frozen only
  std::shared_ptr<const PenaltyConfig> penalty;  // Penalized only

  static EnergyModel raw() { return {Kind::Raw, {}, nullptr}; }
  static EnergyModel frozen(Vec z) { return {Kind::Frozen, std::move(z), nullptr}; }
  static EnergyModel penalized(std::shared_ptr<const PenaltyConfig> cfg) {
    return {Kind::Penalized, {}, std::move(cfg)};
  }
  /// Raw functional after the change of variables x -> eps x: unit
  /// gradient weight, coefficients sampled at eps x.
  static EnergyModel rescaled() { return {Kind::Rescaled, {}, nullptr}; }
};

/// Problem data shared by the solvers: dimension, exponent, coefficient
/// fields, penalization region and the computational grid.
struct ProblemSpec {
  int N = 0;
  double p = 0.0;
  PotentialField V;
  DiffusionField J;
  std::optional<Box> lambda;
  GridPtr grid;
};

/// Value / gradient / Hessian-action triple produced by functional_eval.
/// The gradient is the exact derivative of the discrete energy, returned
/// as its Riesz representative in the mesh inner product.
struct FunctionalEval {
  double value = 0.0;
  GridFunction grad;
  std::function<GridFunction(const GridFunction&)> hess_action;
};

/// Cell-midpoint discretization of one energy with frozen coefficient
/// caches: value, exact gradient and Hessian action all derive from the
/// same discrete sum. Construction samples the coefficient fields once.
class DiscreteFunctional {
 public:
  DiscreteFunctional(GridPtr dom, double eps, const ProblemSpec& spec,
                     const EnergyModel& model);

  double value(const GridFunction& u) const;
  double value_and_grad(const GridFunction& u, GridFunction& grad) const;
  GridFunction gradient(const GridFunction& u) const;
  /// Hessian action at base point u; evaluates f'(u_c) caches once.
  std::function<GridFunction(const GridFunction&)> hessian_action(
      const GridFunction& u) const;

  /// Quadratic part Q(u) = eps^2 <J grad u, grad u> + V u^2 (quadrature).
  double quadratic_part(const GridFunction& u) const;
  /// P(u) = integral (u^+)^{p+1}.
  double power_part(const GridFunction& u) const;
  /// dE(tu)[u] for the Nehari bisection in penalized mode.
  double directional_at_scale(const GridFunction& u, double t) const;

  const GridDomain& dom() const { return *dom_; }
  double p() const { return p_; }
  EnergyModel::Kind kind() const { return kind_; }

 private:
  GridPtr dom_;
  double p_;
  double epsq_;  // effective eps^2 multiplying the gradient term
  EnergyModel::Kind kind_;
  std::shared_ptr<const PenaltyConfig> penalty_;
  // Per-cell caches: V, packed symmetric J, and (penalized) chi_Lambda.
  std::vector<double> vc_;
  std::vector<double> jc_;  // cells x N*N row-major
  std::vector<unsigned char> inside_;
  bool j_is_identity_ = false;

  template <class F>
  void cell_loop(F&& body) const;
};

/// Spec-level operation: builds the functional and evaluates it at u.
FunctionalEval functional_eval(const GridFunction& u, double eps,
                               const ProblemSpec& spec,
                               const EnergyModel& model);

/// Weighted norm (integral |grad u|^2 + V u^2)^{1/2}, same quadrature as
/// the energies.
double hv_norm(const GridFunction& u, const PotentialField& V);

/// H^1-type mesh norm (V == 1 weight); used for correction sizes.
double norm_h1(const GridFunction& u);
/// The matching inner product.
double dot_h1(const GridFunction& a, const GridFunction& b);

/// Fills u with samples of a callable at interior nodes.
GridFunction sample(GridPtr dom, const std::function<double(const Vec&)>& f);

/// Serialization: flat binary array plus a text sidecar, and CSV for N<=2.
void save_grid_function(const GridFunction& u, const std::string& path_bin,
                        const std::string& path_sidecar,
                        const std::string& header);
GridFunction load_grid_function(const std::string& path_bin,
                                const std::string& path_sidecar);
void save_grid_function_csv(const GridFunction& u, const std::string& path,
                            const std::string& header);

}  // namespace concentra
