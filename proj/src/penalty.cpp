#include "concentra/penalty.hpp"

#include <cmath>

namespace concentra {

double default_theta(double p) { return 0.5 * (p + 3.0); }

double default_k(double theta) { return 2.0 * theta / (theta - 2.0); }

double penalty_threshold(double p, double alpha, double k) {
  if (!(alpha > 0)) throw ConfigError("penalty threshold needs alpha > 0");
  if (!(p > 1)) throw ConfigError("penalty threshold needs p > 1");
  if (!(k > 0)) throw ConfigError("penalty threshold needs k > 0");
  return std::pow(alpha / k, 1.0 / (p - 1.0));
}

double penalty_threshold(const std::function<double(double)>& f, double alpha,
                         double k, double u_cap) {
  if (!(alpha > 0) || !(k > 0))
    throw ConfigError("penalty threshold needs alpha, k > 0");
  const double target = alpha / k;
  auto res = [&](double u) { return f(u) / u - target; };
  double hi = 1.0;
  while (res(hi) < 0.0) {
    hi *= 2.0;
    if (hi > u_cap)
      throw SolverError(
          "penalty threshold: f(u)/u never reaches alpha/k; nonlinearity "
          "shape assumption (f4) violated");
  }
  double lo = hi;
  while (res(lo) > 0.0) {
    lo *= 0.5;
    if (lo < 1e-300)
      throw SolverError(
          "penalty threshold: f(u)/u has no sign change near zero; "
          "assumption (f1) violated");
  }
  for (int i = 0; i < 200 && (hi - lo) > 1e-15 * hi; ++i) {
    double mid = 0.5 * (lo + hi);
    (res(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

double PenaltyConfig::g_in(double u) const {
  return u > 0.0 ? std::pow(u, p) : 0.0;
}

double PenaltyConfig::G_in(double u) const {
  return u > 0.0 ? std::pow(u, p + 1.0) / (p + 1.0) : 0.0;
}

double PenaltyConfig::gp_in(double u) const {
  return u > 0.0 ? p * std::pow(u, p - 1.0) : 0.0;
}

double PenaltyConfig::g_out(double u) const {
  if (u <= 0.0) return 0.0;
  if (u <= ell) return std::pow(u, p);
  return (alpha / k) * u;
}

double PenaltyConfig::G_out(double u) const {
  if (u <= 0.0) return 0.0;
  if (u <= ell) return std::pow(u, p + 1.0) / (p + 1.0);
  // closed form: power primitive up to ell, then the linear piece
  return std::pow(ell, p + 1.0) / (p + 1.0) +
         0.5 * (alpha / k) * (u * u - ell * ell);
}

double PenaltyConfig::gp_out(double u) const {
  if (u <= 0.0) return 0.0;
  if (u <= ell) return p * std::pow(u, p - 1.0);  // one-sided at the kink
  return alpha / k;
}

std::shared_ptr<const PenaltyConfig> make_penalty(const Box& lambda, double p,
                                                  double alpha, double k,
                                                  double theta) {
  if (!(p > 1)) throw ConfigError("penalization needs p > 1");
  if (!(alpha > 0)) throw ConfigError("penalization needs alpha > 0");
  if (theta == 0.0) theta = default_theta(p);
  if (k == 0.0) k = default_k(theta);
  if (!(theta > 2.0 && theta < p + 1.0))
    throw ConfigError("penalization needs theta in (2, p+1)");
  if (!(k > theta / (theta - 2.0)))
    throw ConfigError("penalization needs k > theta/(theta-2)");
  PenaltyConfig cfg;
  cfg.lambda = lambda;
  cfg.p = p;
  cfg.alpha = alpha;
  cfg.k = k;
  cfg.theta = theta;
  cfg.ell = penalty_threshold(p, alpha, k);
  // f(ell)/ell = alpha/k must hold to 1e-12 relative.
  double resid = std::abs(std::pow(cfg.ell, p - 1.0) - alpha / k);
  if (!(cfg.ell > 0) || resid > 1e-12 * (alpha / k))
    throw ConfigError("penalization threshold failed its residual check");
  return std::make_shared<const PenaltyConfig>(cfg);
}

PenalizedValue penalized_nonlinearity(const Vec& x, double u,
                                      const PenaltyConfig& cfg) {
  PenalizedValue out;
  if (cfg.inside(x)) {
    out.g = cfg.g_in(u);
    out.G = cfg.G_in(u);
    out.gp = cfg.gp_in(u);
  } else {
    out.g = cfg.g_out(u);
    out.G = cfg.G_out(u);
    out.gp = cfg.gp_out(u);
  }
  return out;
}

}  // namespace concentra
