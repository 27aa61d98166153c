#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

namespace apsm {

/// Dense real vector used throughout. All arithmetic partners must share length.
using RealVec = Eigen::VectorXd;

/// Closed slab between two parallel hyperplanes: { x : |d - a^T x| <= xi }.
/// Invariants: a != 0, xi >= 0, all components finite.
struct Hyperslab {
  RealVec a;
  double d = 0.0;
  double xi = 0.0;

  /// Membership test; boundary points are members.
  bool contains(const RealVec& x) const { return std::abs(d - a.dot(x)) <= xi; }
};

/// Weighted l1 ball { x : sum_j w_j |x_j| <= radius } with strictly positive weights.
struct WeightedL1Ball {
  RealVec w;
  double radius = 0.0;

  double weighted_norm(const RealVec& x) const { return w.dot(x.cwiseAbs()); }
  bool contains(const RealVec& x) const { return weighted_norm(x) <= radius; }
};

/// Throws std::invalid_argument unless every component of x is finite.
inline void require_finite(const RealVec& x, const char* what) {
  if (!x.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite component");
}

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite value");
}

/// Scale-aware zero threshold used when testing vectors against zero.
inline double zero_threshold(const RealVec& x, double base = 1e-12) {
  return base * (1.0 + x.norm());
}

}  // namespace apsm
