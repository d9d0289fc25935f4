#include "concentra/fields.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace concentra {

std::string to_string(CritKind k) {
  switch (k) {
    case CritKind::Minimum: return "min";
    case CritKind::Maximum: return "max";
    case CritKind::Saddle: return "saddle";
    case CritKind::Degenerate: return "degenerate";
  }
  return "?";
}

double gamma_exponent(int N, double p) {
  return (p + 1.0) / (p - 1.0) - 0.5 * N;
}

namespace {

void check_admissible(const Vec& z, double v, const Mat& J) {
  if (!(v > 0.0))
    throw DomainError("assumption (V) violated: V" + format_point(z) +
                      " = " + std::to_string(v) + " is not positive");
  if (!J.isApprox(J.transpose(), 1e-12))
    throw DomainError("assumption (J) violated: J" + format_point(z) +
                      " is not symmetric");
  Eigen::LLT<Mat> llt(J);
  if (llt.info() != Eigen::Success)
    throw DomainError("assumption (J) violated: J" + format_point(z) +
                      " is not positive-definite");
}

}  // namespace

LandscapeSample gamma_eval(const Vec& z, const PotentialField& V,
                           const DiffusionField& J, int N, double p) {
  if (N >= 3 && !(p < (N + 2.0) / (N - 2.0)))
    throw ConfigError("exponent p must satisfy 1 < p < (N+2)/(N-2)");
  if (!(p > 1.0)) throw ConfigError("exponent p must exceed 1");

  double v = V.value(z);
  Mat Jz = J.value(z);
  check_admissible(z, v, Jz);

  double e = gamma_exponent(N, p);
  double detJ = Jz.determinant();
  double sdet = std::sqrt(detJ);
  double gamma = std::pow(v, e) * sdet;

  Vec gv = V.grad(z);
  Mat Jinv = Jz.inverse();
  Vec g(z.size());
  for (int i = 0; i < z.size(); ++i) {
    double ddet_i = 0.5 * sdet * (Jinv * J.deriv(z, i)).trace();
    g(i) = e * std::pow(v, e - 1.0) * gv(i) * sdet + std::pow(v, e) * ddet_i;
  }

  LandscapeSample s;
  s.z = z;
  s.gamma = gamma;
  s.grad = g;
  s.kind = CritKind::Degenerate;  // classification is the search's job
  return s;
}

Transform diagonalizing_transform(const Mat& J_at_z) {
  if (!J_at_z.isApprox(J_at_z.transpose(), 1e-12))
    throw DomainError("diagonalizing transform requires a symmetric matrix");
  Eigen::LLT<Mat> llt(J_at_z);
  if (llt.info() != Eigen::Success)
    throw DomainError(
        "ellipticity violation: Cholesky breakdown (non-positive pivot)");
  Mat L = llt.matrixL();
  Transform t;
  t.T = L.transpose().inverse();  // T = L^{-t}, so T^t J T = I
  t.z = Vec::Zero(J_at_z.rows());
  double detL = 1.0;
  for (int i = 0; i < L.rows(); ++i) detL *= L(i, i);
  t.det = 1.0 / detL;
  return t;
}

Transform diagonalizing_transform(const Vec& z, const DiffusionField& J) {
  Transform t = diagonalizing_transform(J.value(z));
  t.z = z;
  return t;
}

Mat fd_hessian(const std::function<Vec(const Vec&)>& grad, const Vec& z) {
  const double h = 1e-5 * (1.0 + z.norm());
  int n = static_cast<int>(z.size());
  Mat H(n, n);
  for (int i = 0; i < n; ++i) {
    Vec zp = z, zm = z;
    zp(i) += h;
    zm(i) -= h;
    H.col(i) = (grad(zp) - grad(zm)) / (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

namespace {

// FD Hessian of Gamma from its analytic gradient.
Mat gamma_hessian(const Vec& z, const PotentialField& V,
                  const DiffusionField& J, int N, double p, double step) {
  int n = static_cast<int>(z.size());
  Mat H(n, n);
  double h = step * (1.0 + z.norm());
  for (int i = 0; i < n; ++i) {
    Vec zp = z, zm = z;
    zp(i) += h;
    zm(i) -= h;
    H.col(i) = (gamma_eval(zp, V, J, N, p).grad -
                gamma_eval(zm, V, J, N, p).grad) /
               (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

CritKind classify(const Mat& H, double degeneracy_rel) {
  Eigen::SelfAdjointEigenSolver<Mat> es(H);
  Vec ev = es.eigenvalues();
  double scale = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  int pos = 0, neg = 0;
  for (int i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) < degeneracy_rel * scale) return CritKind::Degenerate;
    if (ev(i) > 0) ++pos; else ++neg;
  }
  if (pos == ev.size()) return CritKind::Minimum;
  if (neg == ev.size()) return CritKind::Maximum;
  return CritKind::Saddle;
}

}  // namespace

std::vector<LandscapeSample> find_gamma_critical_points(
    const Box& box, int coarse_grid, double tol, const PotentialField& V,
    const DiffusionField& J, int N, double p,
    const CriticalPointOptions& opts) {
  if (box.dim() < 1 || (box.hi - box.lo).minCoeff() <= 0.0)
    throw ConfigError("critical-point search needs a nonempty box");
  if (!(tol > 0.0)) throw ConfigError("critical-point tolerance must be > 0");

  const int dim = box.dim();
  const int m = std::max(coarse_grid, 3);

  // Coarse scan: gradient norm on the lattice.
  std::vector<Vec> nodes;
  std::vector<double> gnorm, gval;
  long total = 1;
  for (int i = 0; i < dim; ++i) total *= m;
  nodes.reserve(total);
  for (long flat = 0; flat < total; ++flat) {
    long rem = flat;
    Vec z(dim);
    for (int a = dim - 1; a >= 0; --a) {
      long idx = rem % m;
      rem /= m;
      z(a) = box.lo(a) + (box.hi(a) - box.lo(a)) * idx / double(m - 1);
    }
    LandscapeSample s = gamma_eval(z, V, J, N, p);
    nodes.push_back(z);
    gnorm.push_back(s.grad.norm());
    gval.push_back(s.gamma);
  }

  // Constant landscape: every point is critical.
  double gmax = *std::max_element(gval.begin(), gval.end());
  double gmin = *std::min_element(gval.begin(), gval.end());
  double gradmax = *std::max_element(gnorm.begin(), gnorm.end());
  if (gradmax <= tol && gmax - gmin <= tol * std::max(1.0, gmax)) {
    LandscapeSample s = gamma_eval(box.center(), V, J, N, p);
    s.kind = CritKind::Degenerate;
    return {s};
  }

  // Candidates: lattice-local minima of |grad Gamma| (axis neighbors).
  std::vector<Vec> candidates;
  std::vector<long> strides(dim, 1);
  for (int a = dim - 2; a >= 0; --a) strides[a] = strides[a + 1] * m;
  for (long flat = 0; flat < total; ++flat) {
    bool is_min = true;
    long rem = flat;
    std::vector<long> mi(dim);
    for (int a = dim - 1; a >= 0; --a) {
      mi[a] = rem % m;
      rem /= m;
    }
    for (int a = 0; a < dim && is_min; ++a) {
      if (mi[a] > 0 && gnorm[flat - strides[a]] < gnorm[flat]) is_min = false;
      if (mi[a] < m - 1 && gnorm[flat + strides[a]] < gnorm[flat])
        is_min = false;
    }
    if (is_min) candidates.push_back(nodes[flat]);
  }

  // Damped Newton on grad Gamma with FD Hessian.
  std::vector<LandscapeSample> found;
  const double dedup = std::sqrt(tol);
  const Vec span = box.hi - box.lo;
  for (const Vec& z0 : candidates) {
    Vec z = z0;
    bool ok = false;
    for (int it = 0; it < opts.max_newton; ++it) {
      LandscapeSample s = gamma_eval(z, V, J, N, p);
      if (s.grad.norm() <= tol) {
        ok = true;
        break;
      }
      Mat H = gamma_hessian(z, V, J, N, p, opts.fd_step_scale);
      Vec step = H.fullPivLu().solve(-s.grad);
      if (!step.allFinite()) break;
      // Backtrack on |grad|.
      double damp = 1.0;
      bool moved = false;
      for (int bt = 0; bt < 30; ++bt) {
        Vec zt = z + damp * step;
        bool inside_wide = true;
        for (int a = 0; a < dim; ++a)
          if (zt(a) < box.lo(a) - 0.5 * span(a) ||
              zt(a) > box.hi(a) + 0.5 * span(a))
            inside_wide = false;
        if (inside_wide) {
          LandscapeSample st = gamma_eval(zt, V, J, N, p);
          if (st.grad.norm() < s.grad.norm()) {
            z = zt;
            moved = true;
            break;
          }
        }
        damp *= 0.5;
      }
      if (!moved) break;
    }
    if (!ok) {
      if (opts.log_dropped)
        std::fprintf(stderr,
                     "[concentra] critical-point candidate at %s dropped: "
                     "Newton did not converge\n",
                     format_point(z0).c_str());
      continue;
    }
    if (!box.contains(z)) continue;
    bool dup = false;
    for (const auto& f : found)
      if ((f.z - z).norm() < dedup) {
        dup = true;
        break;
      }
    if (dup) continue;
    LandscapeSample s = gamma_eval(z, V, J, N, p);
    s.kind = classify(gamma_hessian(z, V, J, N, p, opts.fd_step_scale),
                      opts.degeneracy_rel);
    found.push_back(std::move(s));
  }

  std::sort(found.begin(), found.end(),
            [](const LandscapeSample& a, const LandscapeSample& b) {
              for (int i = 0; i < a.z.size(); ++i) {
                if (a.z(i) < b.z(i) - 1e-14) return true;
                if (a.z(i) > b.z(i) + 1e-14) return false;
              }
              return false;
            });
  return found;
}

// --- built-in families ---------------------------------------------------

namespace {

const std::vector<double>& require(const FieldSpec& s, const std::string& key,
                                   size_t count) {
  auto it = s.params.find(key);
  if (it == s.params.end())
    throw ConfigError("field family '" + s.family + "' needs parameter '" +
                      key + "'");
  if (count > 0 && it->second.size() != count)
    throw ConfigError("field parameter '" + key + "' must have " +
                      std::to_string(count) + " entries");
  return it->second;
}

std::vector<double> optional_list(const FieldSpec& s, const std::string& key,
                                  std::vector<double> def) {
  auto it = s.params.find(key);
  return it == s.params.end() ? def : it->second;
}

Vec to_vec(const std::vector<double>& v) {
  Vec out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out(i) = v[i];
  return out;
}

void install_fd_hess(PotentialField& f) {
  auto grad = f.grad;
  f.hess = [grad](const Vec& z) { return fd_hessian(grad, z); };
}

}  // namespace

PotentialField make_potential(const FieldSpec& spec, int N) {
  PotentialField f;
  if (spec.family == "constant") {
    double v = require(spec, "value", 1)[0];
    if (!(v > 0)) throw ConfigError("constant potential must be positive");
    f.value = [v](const Vec&) { return v; };
    f.grad = [N](const Vec&) { return Vec::Zero(N); };
    f.hess = [N](const Vec&) { return Mat::Zero(N, N); };
    f.alpha = v;
  } else if (spec.family == "quadratic_well") {
    // V(z) = 1 + c |z - z0|^2
    double c = require(spec, "c", 1)[0];
    Vec z0 = to_vec(require(spec, "center", N));
    if (!(c >= 0)) throw ConfigError("quadratic well needs c >= 0");
    f.value = [c, z0](const Vec& z) { return 1.0 + c * (z - z0).squaredNorm(); };
    f.grad = [c, z0](const Vec& z) { return Vec(2.0 * c * (z - z0)); };
    f.hess = [c, N](const Vec&) { return Mat(2.0 * c * Mat::Identity(N, N)); };
    f.alpha = 1.0;
  } else if (spec.family == "gaussian_wells") {
    // V(z) = base - sum_i depth_i exp(-|z-c_i|^2 / width_i^2)
    double base = require(spec, "base", 1)[0];
    std::vector<double> depths = require(spec, "depths", 0);
    std::vector<double> widths = require(spec, "widths", depths.size());
    std::vector<double> centers_flat =
        require(spec, "centers", depths.size() * N);
    size_t k = depths.size();
    std::vector<Vec> centers(k);
    for (size_t i = 0; i < k; ++i) {
      centers[i] = Vec(N);
      for (int a = 0; a < N; ++a) centers[i](a) = centers_flat[i * N + a];
    }
    double total = 0.0;
    for (double d : depths) {
      if (!(d >= 0)) throw ConfigError("gaussian well depths must be >= 0");
      total += d;
    }
    if (!(base - total > 0))
      throw ConfigError("gaussian wells: base - sum(depths) must stay positive");
    for (double w : widths)
      if (!(w > 0)) throw ConfigError("gaussian well widths must be positive");
    f.value = [=](const Vec& z) {
      double v = base;
      for (size_t i = 0; i < k; ++i)
        v -= depths[i] *
             std::exp(-(z - centers[i]).squaredNorm() / (widths[i] * widths[i]));
      return v;
    };
    f.grad = [=](const Vec& z) {
      Vec g = Vec::Zero(N);
      for (size_t i = 0; i < k; ++i) {
        double w2 = widths[i] * widths[i];
        double e = std::exp(-(z - centers[i]).squaredNorm() / w2);
        g += depths[i] * e * 2.0 / w2 * (z - centers[i]);
      }
      return g;
    };
    f.hess = [=](const Vec& z) {
      Mat H = Mat::Zero(N, N);
      for (size_t i = 0; i < k; ++i) {
        double w2 = widths[i] * widths[i];
        Vec d = z - centers[i];
        double e = std::exp(-d.squaredNorm() / w2);
        H += depths[i] * e * (2.0 / w2) *
             (Mat::Identity(N, N) - (2.0 / w2) * d * d.transpose());
      }
      return H;
    };
    f.alpha = base - total;
  } else {
    throw ConfigError("unknown potential family '" + spec.family + "'");
  }
  if (!f.hess) install_fd_hess(f);
  return f;
}

DiffusionField make_diffusion(const FieldSpec& spec, int N,
                              const std::optional<Box>& box) {
  DiffusionField f;
  if (spec.family == "identity") {
    f.value = [N](const Vec&) { return Mat(Mat::Identity(N, N)); };
    f.deriv = [N](const Vec&, int) { return Mat(Mat::Zero(N, N)); };
    f.nu = 1.0;
    f.upper = 1.0;
  } else if (spec.family == "diag_const") {
    Vec d = to_vec(require(spec, "diag", N));
    if (!(d.minCoeff() > 0))
      throw ConfigError("diag_const entries must be positive");
    f.value = [d](const Vec&) { return Mat(d.asDiagonal()); };
    f.deriv = [N](const Vec&, int) { return Mat(Mat::Zero(N, N)); };
    f.nu = d.minCoeff();
    f.upper = d.maxCoeff();
  } else if (spec.family == "const_matrix") {
    std::vector<double> flat = require(spec, "matrix", size_t(N) * N);
    Mat M(N, N);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) M(i, j) = flat[i * N + j];
    if (!M.isApprox(M.transpose(), 1e-12))
      throw ConfigError("const_matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(M);
    if (!(es.eigenvalues().minCoeff() > 0))
      throw ConfigError("const_matrix must be positive-definite");
    f.value = [M](const Vec&) { return M; };
    f.deriv = [N](const Vec&, int) { return Mat(Mat::Zero(N, N)); };
    f.nu = es.eigenvalues().minCoeff();
    f.upper = es.eigenvalues().maxCoeff();
  } else if (spec.family == "diag_quad" || spec.family == "diag_affine") {
    // diag entries a_i + b_i z_{k_i}^2 (quad) or a_i + b_i z_{k_i} (affine)
    Vec a = to_vec(require(spec, "a", N));
    Vec b = to_vec(require(spec, "b", N));
    std::vector<double> axd = optional_list(spec, "axis", {});
    std::vector<int> ax(N);
    for (int i = 0; i < N; ++i) {
      ax[i] = axd.empty() ? i : static_cast<int>(axd[i]) - 1;  // 1-based
      if (ax[i] < 0 || ax[i] >= N)
        throw ConfigError("diag field: axis index out of range");
    }
    bool quad = spec.family == "diag_quad";
    if (quad) {
      if (!(a.minCoeff() > 0) || b.minCoeff() < 0)
        throw ConfigError("diag_quad needs a_i > 0 and b_i >= 0");
      f.nu = a.minCoeff();
      if (!box)
        throw ConfigError("diag_quad needs the computational box for bounds");
      double up = 0;
      for (int i = 0; i < N; ++i) {
        double zmax = std::max(std::abs(box->lo(ax[i])), std::abs(box->hi(ax[i])));
        up = std::max(up, a(i) + b(i) * zmax * zmax);
      }
      f.upper = up;
    } else {
      if (!box)
        throw ConfigError("diag_affine needs the computational box for bounds");
      double lo = 1e300, up = -1e300;
      for (int i = 0; i < N; ++i) {
        double v1 = a(i) + b(i) * box->lo(ax[i]);
        double v2 = a(i) + b(i) * box->hi(ax[i]);
        lo = std::min({lo, v1, v2});
        up = std::max({up, v1, v2});
      }
      if (!(lo > 0))
        throw ConfigError("diag_affine entries must stay positive on the box");
      f.nu = lo;
      f.upper = up;
    }
    f.value = [=](const Vec& z) {
      Vec d(N);
      for (int i = 0; i < N; ++i) {
        double t = z(ax[i]);
        d(i) = a(i) + b(i) * (quad ? t * t : t);
      }
      return Mat(d.asDiagonal());
    };
    f.deriv = [=](const Vec& z, int k) {
      Mat D = Mat::Zero(N, N);
      for (int i = 0; i < N; ++i)
        if (ax[i] == k) D(i, i) = quad ? 2.0 * b(i) * z(k) : b(i);
      return D;
    };
  } else {
    throw ConfigError("unknown diffusion family '" + spec.family + "'");
  }
  return f;
}

}  // namespace concentra
