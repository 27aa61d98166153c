#pragma once

#include <apsm/types.hpp>

#include <functional>
#include <utility>
#include <vector>

namespace apsm {

enum class OperatorKind {
  Identity,
  RelaxedProjection,
  SubgradientProjection,
  Composition,
  InconsistentPrior,
  Custom,
};

/// Strongly attracting quasi-nonexpansive mapping T with attraction constant
/// eta > 0: for every fixed point v of T,
///   eta * |x - T(x)|^2 <= |x - v|^2 - |T(x) - v|^2.
/// Larger eta is a stronger statement. The identity carries kind Identity and
/// eta = +inf (any constant is valid for it); composition treats it specially
/// so no infinity arithmetic occurs.
///
/// An operator may carry a membership predicate for its fixed-point set. It is
/// meant for tests and diagnostics only; no algorithm step depends on it.
class AttractingOperator {
 public:
  using ApplyFn = std::function<RealVec(const RealVec&)>;
  using MemberFn = std::function<bool(const RealVec&)>;

  AttractingOperator(ApplyFn apply, double eta, OperatorKind kind, MemberFn fix_member = nullptr);

  static AttractingOperator identity();

  RealVec operator()(const RealVec& x) const { return apply_(x); }

  double eta() const { return eta_; }
  OperatorKind kind() const { return kind_; }
  bool is_identity() const { return kind_ == OperatorKind::Identity; }

  bool has_fix_membership() const { return static_cast<bool>(fix_member_); }
  bool fix_contains(const RealVec& x) const;

 private:
  ApplyFn apply_;
  double eta_;
  OperatorKind kind_;
  MemberFn fix_member_;
};

/// Value/subgradient pair for a continuous convex loss. subgrad must return an
/// element of the subdifferential at the query point.
struct ConvexLossOracle {
  std::function<double(const RealVec&)> value;
  std::function<RealVec(const RealVec&)> subgrad;
};

/// Metric projection onto the hyperplane { y : a^T y = b }. Throws on a = 0.
RealVec project_hyperplane(const RealVec& x, const RealVec& a, double b);

/// Metric projection onto a hyperslab. Members (boundary included) map to
/// themselves; outside points project onto the nearer bounding hyperplane.
RealVec project_hyperslab(const RealVec& x, const Hyperslab& slab);

/// Distance from x to the slab, zero for members.
double hyperslab_distance(const RealVec& x, const Hyperslab& slab);

/// Relaxation x + alpha (T(x) - x) for alpha in (0, 2). For a base operator
/// with constant eta the result is (1 + eta - alpha)/alpha attracting, which
/// for a metric projection (eta = 1) is the familiar (2 - alpha)/alpha.
/// Requires alpha < 1 + eta; relaxing the identity returns the identity.
AttractingOperator relax(const AttractingOperator& T, double alpha);

/// Relaxation of a plain projection function (treated as 1-attracting).
AttractingOperator relax_projection(AttractingOperator::ApplyFn project, double alpha,
                                    AttractingOperator::MemberFn member = nullptr);

/// One relaxed subgradient projection step for the level set { loss <= 0 }:
///   x - lambda * (loss(x) / |g|^2) * g   when loss(x) > 0 and g != 0,
///   x                                    otherwise,
/// with g = subgrad(x) and lambda in (0, 2). The zero test on g is scale
/// aware: |g| <= 1e-12 (1 + |x|).
RealVec subgradient_projection_step(const ConvexLossOracle& loss, const RealVec& x, double lambda);

/// Composition x -> T1(T2(x)). Attraction constant eta1 eta2 / (eta1 + eta2);
/// identity factors drop out and keep the partner's constant. The fixed-point
/// membership, when both factors carry one, is the conjunction.
AttractingOperator compose_attracting(const AttractingOperator& T1, const AttractingOperator& T2);

/// Specification of a prior that balances a hard constraint set (projection
/// given by hard_projection) against soft sets that need not intersect it.
/// betas are convex weights over the soft sets; lambda in (0, 2) controls the
/// step toward the weighted projection average.
struct InconsistentPriorSpec {
  std::function<RealVec(const RealVec&)> hard_projection;
  std::vector<std::function<RealVec(const RealVec&)>> soft_projections;
  std::vector<double> betas;
  double lambda;
};

/// Operator x -> P_hard(x + lambda (sum_m beta_m P_m(x) - x)). The inner
/// relaxed average of projections is (2 - lambda)/lambda attracting and the
/// hard projection is 1-attracting, so the composite constant is 1 - lambda/2.
AttractingOperator inconsistent_prior_operator(const InconsistentPriorSpec& spec);

}  // namespace apsm
