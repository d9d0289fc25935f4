#include "concentra/discretization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace concentra {

double GridDomain::cell_volume() const {
  double v = 1.0;
  for (int i = 0; i < N; ++i) v *= h;
  return v;
}

long GridDomain::interior_index(const long* j) const {
  long flat = 0;
  for (int a = 0; a < N; ++a) {
    if (j[a] < 1 || j[a] > n - 2) return -1;
    flat = flat * m() + (j[a] - 1);
  }
  return flat;
}

Vec GridDomain::node_point(long flat_interior) const {
  Vec x(N);
  long rem = flat_interior;
  for (int a = N - 1; a >= 0; --a) {
    long idx = rem % m();
    rem /= m();
    x(a) = coord(idx + 1);
  }
  return x;
}

GridPtr build_grid(int N, double L, int n, double memory_cap_bytes) {
  if (N < 1 || N > 3) throw ConfigError("grid dimension must be 1, 2 or 3");
  if (!(L > 0)) throw ConfigError("grid half-width L must be positive");
  if (n < 8) throw SizeError("grid needs at least 8 nodes per axis");
  double interior = 1, cells = 1;
  for (int a = 0; a < N; ++a) {
    interior *= (n - 2);
    cells *= (n - 1);
  }
  // working set: ~8 grid functions plus per-cell coefficient caches
  double estimate = 8.0 * interior * 8.0 + cells * (N * N + 2.0) * 8.0;
  if (estimate > memory_cap_bytes)
    throw SizeError("grid memory estimate " + std::to_string(estimate) +
                    " bytes exceeds the configured cap");
  auto g = std::make_shared<GridDomain>();
  g->N = N;
  g->L = L;
  g->n = n;
  g->h = 2.0 * L / (n - 1);
  g->interior = static_cast<long>(interior);
  g->cells = static_cast<long>(cells);
  return g;
}

double GridFunction::max_abs() const {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double GridFunction::max() const {
  double m = -1e300;
  for (double x : v) m = std::max(m, x);
  return m;
}

double GridFunction::min() const {
  double m = 1e300;
  for (double x : v) m = std::min(m, x);
  return m;
}

void GridFunction::check_finite(const char* where) const {
  for (double x : v)
    if (!std::isfinite(x))
      throw NumericError(std::string("non-finite values in ") + where);
}

GridFunction operator+(const GridFunction& a, const GridFunction& b) {
  GridFunction r = a;
  for (long i = 0; i < r.size(); ++i) r.v[i] += b.v[i];
  return r;
}

GridFunction operator-(const GridFunction& a, const GridFunction& b) {
  GridFunction r = a;
  for (long i = 0; i < r.size(); ++i) r.v[i] -= b.v[i];
  return r;
}

GridFunction operator*(double s, const GridFunction& a) {
  GridFunction r = a;
  for (double& x : r.v) x *= s;
  return r;
}

void axpy(double a, const GridFunction& x, GridFunction& y) {
  for (long i = 0; i < x.size(); ++i) y.v[i] += a * x.v[i];
}

double dot_mesh(const GridFunction& a, const GridFunction& b) {
  KahanSum s;
  for (long i = 0; i < a.size(); ++i) s.add(a.v[i] * b.v[i]);
  return s.value() * a.dom->cell_volume();
}

double norm_mesh(const GridFunction& a) { return std::sqrt(dot_mesh(a, a)); }

namespace {

// Odometer over cells in lex order (axis 0 most significant). Calls
// body(flat_cell, corner_idx) where corner_idx holds 2^N interior indices
// (-1 on the boundary); corner bit a of corner s selects the +1 offset
// along axis a.
template <class F>
void for_each_cell(const GridDomain& d, F&& body) {
  const int N = d.N;
  const int corners = 1 << N;
  long c[3] = {0, 0, 0};
  long idx[8];
  const long ncell = d.n - 1;
  for (long flat = 0; flat < d.cells; ++flat) {
    long j[3];
    for (int s = 0; s < corners; ++s) {
      for (int a = 0; a < N; ++a) j[a] = c[a] + ((s >> a) & 1);
      idx[s] = d.interior_index(j);
    }
    body(flat, idx);
    for (int a = N - 1; a >= 0; --a) {
      if (++c[a] < ncell) break;
      c[a] = 0;
    }
  }
}

Vec cell_center(const GridDomain& d, long flat) {
  Vec x(d.N);
  long rem = flat;
  for (int a = d.N - 1; a >= 0; --a) {
    long idx = rem % (d.n - 1);
    rem /= (d.n - 1);
    x(a) = d.coord(idx) + 0.5 * d.h;
  }
  return x;
}

}  // namespace

DiscreteFunctional::DiscreteFunctional(GridPtr dom, double eps,
                                       const ProblemSpec& spec,
                                       const EnergyModel& model)
    : dom_(std::move(dom)), p_(spec.p), kind_(model.kind) {
  const GridDomain& d = *dom_;
  switch (kind_) {
    case EnergyModel::Kind::Raw:
    case EnergyModel::Kind::Penalized:
      epsq_ = eps * eps;
      break;
    case EnergyModel::Kind::Frozen:
    case EnergyModel::Kind::Rescaled:
      epsq_ = 1.0;
      break;
  }
  if (kind_ == EnergyModel::Kind::Penalized) {
    if (!model.penalty)
      throw ConfigError("penalized mode requires a PenaltyConfig");
    penalty_ = model.penalty;
    inside_.resize(d.cells);
  }

  vc_.resize(d.cells);
  const int NN = d.N * d.N;
  Mat Jconst;
  double Vconst = 0.0;
  if (kind_ == EnergyModel::Kind::Frozen) {
    if (model.frozen_z.size() != d.N)
      throw ConfigError("frozen mode requires the freezing point z");
    Vconst = spec.V.value(model.frozen_z);
    Jconst = spec.J.value(model.frozen_z);
    if (!(Vconst > 0))
      throw DomainError("assumption (V) violated at the freezing point");
  }
  j_is_identity_ = false;
  if (kind_ == EnergyModel::Kind::Frozen && Jconst.isIdentity(1e-15))
    j_is_identity_ = true;

  if (!j_is_identity_) jc_.resize(d.cells * NN);

  for (long flat = 0; flat < d.cells; ++flat) {
    Vec x = cell_center(d, flat);
    Vec xc = (kind_ == EnergyModel::Kind::Rescaled) ? Vec(eps * x) : x;
    double v;
    Mat J;
    if (kind_ == EnergyModel::Kind::Frozen) {
      v = Vconst;
      if (!j_is_identity_) J = Jconst;
    } else {
      v = spec.V.value(xc);
      J = spec.J.value(xc);
    }
    if (!(v > 0))
      throw DomainError("assumption (V) violated at cell center " +
                        format_point(xc));
    vc_[flat] = v;
    if (!j_is_identity_)
      for (int i = 0; i < NN; ++i) jc_[flat * NN + i] = J.data()[i];
    if (kind_ == EnergyModel::Kind::Penalized)
      inside_[flat] = penalty_->inside(x) ? 1 : 0;
  }
  // Detect identity J cached arrays to use the fast path.
  if (!j_is_identity_ && kind_ != EnergyModel::Kind::Frozen) {
    bool ident = true;
    for (long flat = 0; flat < d.cells && ident; ++flat)
      for (int i = 0; i < d.N && ident; ++i)
        for (int j = 0; j < d.N && ident; ++j)
          if (std::abs(jc_[flat * NN + i * d.N + j] - (i == j ? 1.0 : 0.0)) >
              1e-15)
            ident = false;
    if (ident) {
      j_is_identity_ = true;
      jc_.clear();
      jc_.shrink_to_fit();
    }
  }
}

namespace {

struct CellGeometry {
  int N;
  int corners;
  double inv_corners;       // 2^{-N}
  double inv_face_over_h;   // 2^{-(N-1)} / h
};

CellGeometry geometry(const GridDomain& d) {
  CellGeometry g;
  g.N = d.N;
  g.corners = 1 << d.N;
  g.inv_corners = 1.0 / g.corners;
  g.inv_face_over_h = (2.0 / g.corners) / d.h;
  return g;
}

inline void gather(const std::vector<double>& u, const long* idx, int corners,
                   double* us) {
  for (int s = 0; s < corners; ++s) us[s] = idx[s] >= 0 ? u[idx[s]] : 0.0;
}

inline double center_value(const double* us, const CellGeometry& g) {
  double m = 0.0;
  for (int s = 0; s < g.corners; ++s) m += us[s];
  return m * g.inv_corners;
}

inline void center_gradient(const double* us, const CellGeometry& g,
                            double* du) {
  for (int a = 0; a < g.N; ++a) {
    double acc = 0.0;
    for (int s = 0; s < g.corners; ++s)
      acc += ((s >> a) & 1) ? us[s] : -us[s];
    du[a] = acc * g.inv_face_over_h;
  }
}

}  // namespace

double DiscreteFunctional::value(const GridFunction& u) const {
  u.check_finite("energy argument");
  const GridDomain& d = *dom_;
  const CellGeometry g = geometry(d);
  const int NN = d.N * d.N;
  const double pw = p_;
  KahanSum E;
  double us[8], du[3];
  for_each_cell(d, [&](long flat, const long* idx) {
    gather(u.v, idx, g.corners, us);
    double uc = center_value(us, g);
    center_gradient(us, g, du);
    double quad;
    if (j_is_identity_) {
      quad = 0.0;
      for (int a = 0; a < g.N; ++a) quad += du[a] * du[a];
    } else {
      const double* J = &jc_[flat * NN];
      quad = 0.0;
      for (int i = 0; i < g.N; ++i) {
        double Jdu = 0.0;
        for (int j = 0; j < g.N; ++j) Jdu += J[i * g.N + j] * du[j];
        quad += du[i] * Jdu;
      }
    }
    double Phi;
    if (kind_ == EnergyModel::Kind::Penalized)
      Phi = inside_[flat] ? penalty_->G_in(uc) : penalty_->G_out(uc);
    else
      Phi = uc > 0.0 ? std::pow(uc, pw + 1.0) / (pw + 1.0) : 0.0;
    E.add(0.5 * epsq_ * quad + 0.5 * vc_[flat] * uc * uc - Phi);
  });
  return E.value() * d.cell_volume();
}

double DiscreteFunctional::value_and_grad(const GridFunction& u,
                                          GridFunction& grad) const {
  u.check_finite("energy argument");
  const GridDomain& d = *dom_;
  if (!grad.dom) grad = GridFunction(dom_);
  std::fill(grad.v.begin(), grad.v.end(), 0.0);
  const CellGeometry g = geometry(d);
  const int NN = d.N * d.N;
  const double pw = p_;
  KahanSum E;
  double us[8], du[3], Jdu[3];
  for_each_cell(d, [&](long flat, const long* idx) {
    gather(u.v, idx, g.corners, us);
    double uc = center_value(us, g);
    center_gradient(us, g, du);
    double quad = 0.0;
    if (j_is_identity_) {
      for (int a = 0; a < g.N; ++a) {
        Jdu[a] = du[a];
        quad += du[a] * du[a];
      }
    } else {
      const double* J = &jc_[flat * NN];
      for (int i = 0; i < g.N; ++i) {
        double acc = 0.0;
        for (int j = 0; j < g.N; ++j) acc += J[i * g.N + j] * du[j];
        Jdu[i] = acc;
        quad += du[i] * acc;
      }
    }
    double Phi, dPhi;
    if (kind_ == EnergyModel::Kind::Penalized) {
      if (inside_[flat]) {
        Phi = penalty_->G_in(uc);
        dPhi = penalty_->g_in(uc);
      } else {
        Phi = penalty_->G_out(uc);
        dPhi = penalty_->g_out(uc);
      }
    } else {
      Phi = uc > 0.0 ? std::pow(uc, pw + 1.0) / (pw + 1.0) : 0.0;
      dPhi = uc > 0.0 ? std::pow(uc, pw) : 0.0;
    }
    E.add(0.5 * epsq_ * quad + 0.5 * vc_[flat] * uc * uc - Phi);
    double w0 = (vc_[flat] * uc - dPhi) * g.inv_corners;
    for (int s = 0; s < g.corners; ++s) {
      long i = idx[s];
      if (i < 0) continue;
      double acc = w0;
      for (int a = 0; a < g.N; ++a)
        acc += epsq_ * Jdu[a] * (((s >> a) & 1) ? g.inv_face_over_h
                                                : -g.inv_face_over_h);
      grad.v[i] += acc;
    }
  });
  return E.value() * d.cell_volume();
}

GridFunction DiscreteFunctional::gradient(const GridFunction& u) const {
  GridFunction g(dom_);
  value_and_grad(u, g);
  return g;
}

std::function<GridFunction(const GridFunction&)>
DiscreteFunctional::hessian_action(const GridFunction& u) const {
  const GridDomain& d = *dom_;
  // cache V - Phi''(u_c) per cell
  auto w2 = std::make_shared<std::vector<double>>(d.cells);
  const CellGeometry g = geometry(d);
  const double pw = p_;
  {
    double us[8];
    for_each_cell(d, [&](long flat, const long* idx) {
      gather(u.v, idx, g.corners, us);
      double uc = center_value(us, g);
      double fp;
      if (kind_ == EnergyModel::Kind::Penalized)
        fp = inside_[flat] ? penalty_->gp_in(uc) : penalty_->gp_out(uc);
      else
        fp = uc > 0.0 ? pw * std::pow(uc, pw - 1.0) : 0.0;
      (*w2)[flat] = vc_[flat] - fp;
    });
  }
  GridPtr dom = dom_;
  const double epsq = epsq_;
  const bool ident = j_is_identity_;
  const std::vector<double>* jc = &jc_;
  return [dom, w2, g, epsq, ident, jc](const GridFunction& v) {
    GridFunction out(dom);
    const int NN = g.N * g.N;
    double vs[8], dv[3], Jdv[3];
    for_each_cell(*dom, [&](long flat, const long* idx) {
      gather(v.v, idx, g.corners, vs);
      double vc = center_value(vs, g);
      center_gradient(vs, g, dv);
      if (ident) {
        for (int a = 0; a < g.N; ++a) Jdv[a] = dv[a];
      } else {
        const double* J = &(*jc)[flat * NN];
        for (int i = 0; i < g.N; ++i) {
          double acc = 0.0;
          for (int j = 0; j < g.N; ++j) acc += J[i * g.N + j] * dv[j];
          Jdv[i] = acc;
        }
      }
      double w0 = (*w2)[flat] * vc * g.inv_corners;
      for (int s = 0; s < g.corners; ++s) {
        long i = idx[s];
        if (i < 0) continue;
        double acc = w0;
        for (int a = 0; a < g.N; ++a)
          acc += epsq * Jdv[a] * (((s >> a) & 1) ? g.inv_face_over_h
                                                 : -g.inv_face_over_h);
        out.v[i] += acc;
      }
    });
    return out;
  };
}

double DiscreteFunctional::quadratic_part(const GridFunction& u) const {
  const GridDomain& d = *dom_;
  const CellGeometry g = geometry(d);
  const int NN = d.N * d.N;
  KahanSum Q;
  double us[8], du[3];
  for_each_cell(d, [&](long flat, const long* idx) {
    gather(u.v, idx, g.corners, us);
    double uc = center_value(us, g);
    center_gradient(us, g, du);
    double quad = 0.0;
    if (j_is_identity_) {
      for (int a = 0; a < g.N; ++a) quad += du[a] * du[a];
    } else {
      const double* J = &jc_[flat * NN];
      for (int i = 0; i < g.N; ++i) {
        double acc = 0.0;
        for (int j = 0; j < g.N; ++j) acc += J[i * g.N + j] * du[j];
        quad += du[i] * acc;
      }
    }
    Q.add(epsq_ * quad + vc_[flat] * uc * uc);
  });
  return Q.value() * d.cell_volume();
}

double DiscreteFunctional::power_part(const GridFunction& u) const {
  const GridDomain& d = *dom_;
  const CellGeometry g = geometry(d);
  KahanSum P;
  double us[8];
  for_each_cell(d, [&](long flat, const long* idx) {
    gather(u.v, idx, g.corners, us);
    double uc = center_value(us, g);
    if (uc > 0.0) P.add(std::pow(uc, p_ + 1.0));
  });
  return P.value() * d.cell_volume();
}

double DiscreteFunctional::directional_at_scale(const GridFunction& u,
                                                double t) const {
  // dE(tu)[u] = t*Q(u) - integral g(x, t u_c) u_c
  const GridDomain& d = *dom_;
  const CellGeometry g = geometry(d);
  const int NN = d.N * d.N;
  KahanSum S;
  double us[8], du[3];
  for_each_cell(d, [&](long flat, const long* idx) {
    gather(u.v, idx, g.corners, us);
    double uc = center_value(us, g);
    center_gradient(us, g, du);
    double quad = 0.0;
    if (j_is_identity_) {
      for (int a = 0; a < g.N; ++a) quad += du[a] * du[a];
    } else {
      const double* J = &jc_[flat * NN];
      for (int i = 0; i < g.N; ++i) {
        double acc = 0.0;
        for (int j = 0; j < g.N; ++j) acc += J[i * g.N + j] * du[j];
        quad += du[i] * acc;
      }
    }
    double gg;
    double tu = t * uc;
    if (kind_ == EnergyModel::Kind::Penalized)
      gg = inside_[flat] ? penalty_->g_in(tu) : penalty_->g_out(tu);
    else
      gg = tu > 0.0 ? std::pow(tu, p_) : 0.0;
    S.add(t * (epsq_ * quad + vc_[flat] * uc * uc) - gg * uc);
  });
  return S.value() * d.cell_volume();
}

FunctionalEval functional_eval(const GridFunction& u, double eps,
                               const ProblemSpec& spec,
                               const EnergyModel& model) {
  DiscreteFunctional f(u.dom, eps, spec, model);
  FunctionalEval out;
  out.grad = GridFunction(u.dom);
  out.value = f.value_and_grad(u, out.grad);
  out.hess_action = f.hessian_action(u);
  return out;
}

double hv_norm(const GridFunction& u, const PotentialField& V) {
  const GridDomain& d = *u.dom;
  const CellGeometry g = geometry(d);
  KahanSum S;
  double us[8], du[3];
  for_each_cell(d, [&](long flat, const long* idx) {
    gather(u.v, idx, g.corners, us);
    double uc = center_value(us, g);
    center_gradient(us, g, du);
    double quad = 0.0;
    for (int a = 0; a < g.N; ++a) quad += du[a] * du[a];
    S.add(quad + V.value(cell_center(d, flat)) * uc * uc);
  });
  return std::sqrt(std::max(0.0, S.value() * d.cell_volume()));
}

double dot_h1(const GridFunction& a, const GridFunction& b) {
  const GridDomain& d = *a.dom;
  const CellGeometry g = geometry(d);
  KahanSum S;
  double as[8], bs[8], da[3], db[3];
  for_each_cell(d, [&](long /*flat*/, const long* idx) {
    gather(a.v, idx, g.corners, as);
    gather(b.v, idx, g.corners, bs);
    double ac = center_value(as, g);
    double bc = center_value(bs, g);
    center_gradient(as, g, da);
    center_gradient(bs, g, db);
    double acc = ac * bc;
    for (int i = 0; i < g.N; ++i) acc += da[i] * db[i];
    S.add(acc);
  });
  return S.value() * d.cell_volume();
}

double norm_h1(const GridFunction& u) {
  return std::sqrt(std::max(0.0, dot_h1(u, u)));
}

GridFunction sample(GridPtr dom, const std::function<double(const Vec&)>& f) {
  GridFunction u(dom);
  for (long i = 0; i < u.size(); ++i) u.v[i] = f(dom->node_point(i));
  return u;
}

void save_grid_function(const GridFunction& u, const std::string& path_bin,
                        const std::string& path_sidecar,
                        const std::string& header) {
  std::ofstream bin(path_bin, std::ios::binary);
  if (!bin) throw Error("cannot open " + path_bin);
  bin.write(reinterpret_cast<const char*>(u.v.data()),
            static_cast<std::streamsize>(u.v.size() * sizeof(double)));
  std::ofstream side(path_sidecar);
  if (!side) throw Error("cannot open " + path_sidecar);
  if (!header.empty()) side << "# " << header << "\n";
  char buf[128];
  std::snprintf(buf, sizeof(buf), "N %d n %d L %.17g ordering=lex\n",
                u.dom->N, u.dom->n, u.dom->L);
  side << buf;
}

GridFunction load_grid_function(const std::string& path_bin,
                                const std::string& path_sidecar) {
  std::ifstream side(path_sidecar);
  if (!side) throw Error("cannot open " + path_sidecar);
  std::string line;
  int N = 0, n = 0;
  double L = 0;
  while (std::getline(side, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (std::sscanf(line.c_str(), "N %d n %d L %lg", &N, &n, &L) == 3) break;
  }
  if (N == 0) throw Error("malformed sidecar " + path_sidecar);
  GridFunction u(build_grid(N, L, n));
  std::ifstream bin(path_bin, std::ios::binary);
  if (!bin) throw Error("cannot open " + path_bin);
  bin.read(reinterpret_cast<char*>(u.v.data()),
           static_cast<std::streamsize>(u.v.size() * sizeof(double)));
  if (bin.gcount() != static_cast<std::streamsize>(u.v.size() * sizeof(double)))
    throw Error("binary payload size mismatch in " + path_bin);
  return u;
}

void save_grid_function_csv(const GridFunction& u, const std::string& path,
                            const std::string& header) {
  const GridDomain& d = *u.dom;
  if (d.N > 2) throw ConfigError("CSV export is limited to N <= 2");
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path);
  if (!header.empty()) out << "# " << header << "\n";
  out << (d.N == 1 ? "x,u\n" : "x1,x2,u\n");
  char buf[128];
  for (long i = 0; i < u.size(); ++i) {
    Vec x = d.node_point(i);
    if (d.N == 1)
      std::snprintf(buf, sizeof(buf), "%.12g,%.17g\n", x(0), u.v[i]);
    else
      std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.17g\n", x(0), x(1),
                    u.v[i]);
    out << buf;
  }
}

}  // namespace concentra
