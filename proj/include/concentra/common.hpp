#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace concentra {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A model assumption is violated at a point (non-positive V, loss of
/// ellipticity, point outside the computational box, ...).
struct DomainError : Error {
  using Error::Error;
};

/// Invalid configuration or precondition on user-supplied parameters.
struct ConfigError : Error {
  using Error::Error;
};

/// An iterative solver failed to converge or broke down.
struct SolverError : Error {
  using Error::Error;
};

/// Requested discretization exceeds the configured memory cap.
struct SizeError : Error {
  using Error::Error;
};

/// Non-finite values encountered in numerical data.
struct NumericError : Error {
  using Error::Error;
};

/// Axis-aligned box, lo(i) <= hi(i) per axis.
struct Box {
  Vec lo;
  Vec hi;

  int dim() const { return static_cast<int>(lo.size()); }

  bool contains(const Vec& z) const {
    for (int i = 0; i < dim(); ++i)
      if (z(i) < lo(i) || z(i) > hi(i)) return false;
    return true;
  }

  /// True if this box sits strictly inside `outer` with margin >= gap.
  bool strictly_inside(const Box& outer, double gap) const {
    for (int i = 0; i < dim(); ++i)
      if (lo(i) < outer.lo(i) + gap || hi(i) > outer.hi(i) - gap) return false;
    return true;
  }

  Vec center() const { return 0.5 * (lo + hi); }
};

/// Compensated (Kahan) accumulator; keeps big reductions order-stable at
/// the 1e-15 level so shifted-data energy comparisons hold to 1e-12.
struct KahanSum {
  double s = 0.0;
  double c = 0.0;
  void add(double x) {
    double y = x - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  double value() const { return s; }
};

/// Deterministic, implementation-independent RNG (splitmix64 core).
/// std::normal_distribution is not portable across standard libraries, so
/// reproducible experiments use this instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in (0,1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::uint64_t state_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

std::string format_point(const Vec& z);

}  // namespace concentra
