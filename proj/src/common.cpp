#include "concentra/common.hpp"

#include <cmath>
#include <cstdio>

namespace concentra {

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  // Box-Muller on splitmix64 uniforms: identical streams on every platform.
  double u1 = uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * M_PI * u2;
  cached_ = r * std::sin(a);
  has_cached_ = true;
  return r * std::cos(a);
}

std::string format_point(const Vec& z) {
  std::string out = "(";
  char buf[40];
  for (int i = 0; i < z.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.6g", z(i));
    out += buf;
    if (i + 1 < z.size()) out += ", ";
  }
  out += ")";
  return out;
}

}  // namespace concentra
