#include <apsm/operators.hpp>

#include <cmath>
#include <limits>

namespace apsm {

AttractingOperator::AttractingOperator(ApplyFn apply, double eta, OperatorKind kind, MemberFn fix_member)
    : apply_(std::move(apply)), eta_(eta), kind_(kind), fix_member_(std::move(fix_member)) {
  if (!apply_) throw std::invalid_argument("AttractingOperator: empty apply function");
  if (kind_ != OperatorKind::Identity && !(eta_ > 0.0 && std::isfinite(eta_)))
    throw std::invalid_argument("AttractingOperator: eta must be positive and finite");
}

AttractingOperator AttractingOperator::identity() {
  return AttractingOperator([](const RealVec& x) { return x; },
                            std::numeric_limits<double>::infinity(), OperatorKind::Identity,
                            [](const RealVec&) { return true; });
}

bool AttractingOperator::fix_contains(const RealVec& x) const {
  if (!fix_member_) throw std::logic_error("AttractingOperator: no fixed-point membership attached");
  return fix_member_(x);
}

RealVec project_hyperplane(const RealVec& x, const RealVec& a, double b) {
  require_finite(x, "project_hyperplane: x");
  require_finite(a, "project_hyperplane: a");
  require_finite(b, "project_hyperplane: b");
  if (a.size() != x.size()) throw std::invalid_argument("project_hyperplane: dimension mismatch");
  const double an2 = a.squaredNorm();
  if (an2 == 0.0) throw std::invalid_argument("project_hyperplane: degenerate hyperplane (a = 0)");
  return x + ((b - a.dot(x)) / an2) * a;
}

RealVec project_hyperslab(const RealVec& x, const Hyperslab& slab) {
  require_finite(x, "project_hyperslab: x");
  if (slab.a.size() != x.size()) throw std::invalid_argument("project_hyperslab: dimension mismatch");
  if (slab.a.squaredNorm() == 0.0)
    throw std::invalid_argument("project_hyperslab: degenerate hyperslab (a = 0)");
  const double r = slab.d - slab.a.dot(x);
  if (std::abs(r) <= slab.xi) return x;
  // Nearer bounding hyperplane: a^T y = d - xi when a^T x < d - xi, else d + xi.
  const double b = (r > 0.0) ? slab.d - slab.xi : slab.d + slab.xi;
  return x + ((b - slab.a.dot(x)) / slab.a.squaredNorm()) * slab.a;
}

double hyperslab_distance(const RealVec& x, const Hyperslab& slab) {
  const double r = std::abs(slab.d - slab.a.dot(x));
  if (r <= slab.xi) return 0.0;
  return (r - slab.xi) / slab.a.norm();
}

AttractingOperator relax(const AttractingOperator& T, double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("relax: alpha must lie in (0, 2)");
  if (T.is_identity()) return AttractingOperator::identity();
  if (!(alpha < 1.0 + T.eta()))
    throw std::invalid_argument("relax: alpha must be below 1 + eta of the base operator");
  const double eta = (1.0 + T.eta() - alpha) / alpha;
  auto apply = [T, alpha](const RealVec& x) -> RealVec { return x + alpha * (T(x) - x); };
  AttractingOperator::MemberFn member;
  if (T.has_fix_membership()) member = [T](const RealVec& x) { return T.fix_contains(x); };
  return AttractingOperator(std::move(apply), eta, OperatorKind::RelaxedProjection, std::move(member));
}

AttractingOperator relax_projection(AttractingOperator::ApplyFn project, double alpha,
                                    AttractingOperator::MemberFn member) {
  if (!project) throw std::invalid_argument("relax_projection: empty projection");
  if (!(alpha > 0.0 && alpha < 2.0))
    throw std::invalid_argument("relax_projection: alpha must lie in (0, 2)");
  const double eta = (2.0 - alpha) / alpha;
  auto apply = [p = std::move(project), alpha](const RealVec& x) -> RealVec {
    return x + alpha * (p(x) - x);
  };
  return AttractingOperator(std::move(apply), eta, OperatorKind::RelaxedProjection, std::move(member));
}

RealVec subgradient_projection_step(const ConvexLossOracle& loss, const RealVec& x, double lambda) {
  if (!loss.value || !loss.subgrad) throw std::invalid_argument("subgradient_projection_step: empty oracle");
  if (!(lambda > 0.0 && lambda < 2.0))
    throw std::invalid_argument("subgradient_projection_step: lambda must lie in (0, 2)");
  require_finite(x, "subgradient_projection_step: x");
  const double v = loss.value(x);
  require_finite(v, "subgradient_projection_step: loss value");
  if (v <= 0.0) return x;
  const RealVec g = loss.subgrad(x);
  require_finite(g, "subgradient_projection_step: subgradient");
  if (g.size() != x.size())
    throw std::invalid_argument("subgradient_projection_step: dimension mismatch");
  if (g.norm() <= zero_threshold(x)) return x;
  return x - lambda * (v / g.squaredNorm()) * g;
}

AttractingOperator compose_attracting(const AttractingOperator& T1, const AttractingOperator& T2) {
  if (T1.is_identity()) return T2;
  if (T2.is_identity()) return T1;
  const double eta = T1.eta() * T2.eta() / (T1.eta() + T2.eta());
  auto apply = [T1, T2](const RealVec& x) -> RealVec { return T1(T2(x)); };
  AttractingOperator::MemberFn member;
  if (T1.has_fix_membership() && T2.has_fix_membership())
    member = [T1, T2](const RealVec& x) { return T1.fix_contains(x) && T2.fix_contains(x); };
  return AttractingOperator(std::move(apply), eta, OperatorKind::Composition, std::move(member));
}

AttractingOperator inconsistent_prior_operator(const InconsistentPriorSpec& spec) {
  if (!spec.hard_projection) throw std::invalid_argument("inconsistent_prior_operator: empty hard projection");
  if (spec.soft_projections.empty())
    throw std::invalid_argument("inconsistent_prior_operator: no soft sets");
  if (spec.betas.size() != spec.soft_projections.size())
    throw std::invalid_argument("inconsistent_prior_operator: betas and soft sets must pair up");
  double sum = 0.0;
  for (double b : spec.betas) {
    if (!(b > 0.0 && b <= 1.0))
      throw std::invalid_argument("inconsistent_prior_operator: betas must lie in (0, 1]");
    sum += b;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("inconsistent_prior_operator: betas must sum to 1");
  if (!(spec.lambda > 0.0 && spec.lambda < 2.0))
    throw std::invalid_argument("inconsistent_prior_operator: lambda must lie in (0, 2)");

  const double eta = 1.0 - spec.lambda / 2.0;
  auto apply = [spec](const RealVec& x) -> RealVec {
    RealVec avg = RealVec::Zero(x.size());
    for (std::size_t m = 0; m < spec.soft_projections.size(); ++m)
      avg += spec.betas[m] * spec.soft_projections[m](x);
    return spec.hard_projection(x + spec.lambda * (avg - x));
  };
  return AttractingOperator(std::move(apply), eta, OperatorKind::InconsistentPrior);
}

}  // namespace apsm
