#pragma once

#include <apsm/operators.hpp>
#include <apsm/types.hpp>

#include <vector>

namespace apsm {

/// Hinge of a weighted l1 norm: Phi(x) = max(0, sum_j w_j |x_j| - rho).
/// Weights are strictly positive and bounded, w_j in [w_lo, w_hi]; the zero
/// level set is the weighted l1 ball of radius rho. On the whole space,
/// Phi(x) - Phi(y) <= w_hi sqrt(L) |x - y|.
class SparsityLoss {
 public:
  SparsityLoss(RealVec w, double rho);

  double value(const RealVec& x) const;

  /// Subgradient selection: zero inside the ball and on its boundary, the
  /// sign vector (w_j sign(x_j), with sign(0) = 0) outside. The sign vector
  /// is the centroid of the subdifferential face when x has zero components,
  /// hence always a valid element.
  RealVec subgrad(const RealVec& x) const;

  ConvexLossOracle oracle() const;

  const RealVec& weights() const { return w_; }
  double rho() const { return rho_; }
  double weight_lower() const { return w_lo_; }
  double weight_upper() const { return w_hi_; }
  Eigen::Index dim() const { return w_.size(); }

 private:
  RealVec w_;
  double rho_;
  double w_lo_;
  double w_hi_;
};

/// Uniform convex weights over `count` active indices. Throws when count = 0.
std::vector<double> uniform_active_weights(std::size_t count);

/// Value, subgradient and the aggregates a fused solver step reuses.
struct LossEval {
  double value = 0.0;          ///< Theta(anchor)
  RealVec subgrad;             ///< Theta'(anchor), |subgrad| <= 1
  double normalizer = 0.0;     ///< L = sum_i omega_i dist_i, 0 when no set is violated
  RealVec weighted_projection; ///< sum_i omega_i P_i(anchor) over violated sets
  double weighted_sq_dist = 0.0; ///< sum_i omega_i dist_i^2
};

/// Convex loss built from a window of hyperslabs around a fixed anchor u:
///   Theta(x) = sum_{i in I} (omega_i dist(u, S_i) / L) dist(x, S_i),
/// where I indexes the slabs the anchor violates, omega are convex weights
/// over I, and L = sum_{i in I} omega_i dist(u, S_i). Theta is identically
/// zero when I is empty. Its zero level set contains the intersection of the
/// window. The closed-form subgradient
///   Theta'(u) = (1/L) sum_{i in I} omega_i (u - P_i(u))
/// is only available at the anchor; the oracle rejects other query points.
class WindowLoss {
 public:
  /// Uniform weights over the violated slabs.
  WindowLoss(std::vector<Hyperslab> sets, RealVec anchor);

  /// Explicit convex weights, one per violated slab in window order.
  WindowLoss(std::vector<Hyperslab> sets, RealVec anchor, std::vector<double> omega);

  double value(const RealVec& x) const;

  /// Full evaluation at the anchor.
  LossEval eval_at_anchor() const;

  /// Oracle whose subgrad only answers at the anchor (throws elsewhere).
  ConvexLossOracle oracle() const;

  /// Largest distance from x to any slab of the window, violated or not.
  double max_distance(const RealVec& x) const;

  std::size_t active_count() const { return active_.size(); }
  std::size_t window_size() const { return sets_.size(); }
  const RealVec& anchor() const { return anchor_; }

 private:
  void init(std::vector<double> omega_or_empty);

  std::vector<Hyperslab> sets_;
  RealVec anchor_;
  std::vector<std::size_t> active_;   // indices of violated slabs
  std::vector<double> omega_;         // convex weights over active_
  std::vector<double> dist_;          // anchor distances over active_
  LossEval anchor_eval_;
};

}  // namespace apsm
