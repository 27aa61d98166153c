#include <apsm/sparse.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace apsm {

Hyperslab make_hyperslab(RealVec a, double d, double xi) {
  require_finite(a, "make_hyperslab: a");
  require_finite(d, "make_hyperslab: d");
  require_finite(xi, "make_hyperslab: xi");
  if (a.squaredNorm() == 0.0) throw std::invalid_argument("make_hyperslab: a must be nonzero");
  if (xi < 0.0) throw std::invalid_argument("make_hyperslab: xi must be nonnegative");
  return Hyperslab{std::move(a), d, xi};
}

RealVec update_weights(const RealVec& u, double eps) {
  require_finite(u, "update_weights: u");
  if (!(eps > 0.0)) throw std::invalid_argument("update_weights: eps must be positive");
  return (u.cwiseAbs().array() + eps).inverse().matrix();
}

RealVec project_weighted_l1(const RealVec& x, const WeightedL1Ball& ball) {
  require_finite(x, "project_weighted_l1: x");
  if (ball.w.size() != x.size()) throw std::invalid_argument("project_weighted_l1: dimension mismatch");
  if (!(ball.w.minCoeff() > 0.0))
    throw std::invalid_argument("project_weighted_l1: weights must be strictly positive");
  if (!(ball.radius > 0.0)) throw std::invalid_argument("project_weighted_l1: radius must be positive");
  if (ball.contains(x)) return x;

  const Eigen::Index n = x.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    const double ri = std::abs(x[i]) / ball.w[i];
    const double rj = std::abs(x[j]) / ball.w[j];
    if (ri != rj) return ri > rj;
    return i < j;  // deterministic tie-break
  });

  // Largest prefix l such that t_l = (S_l - radius)/W_l stays below the
  // smallest surviving ratio; the prefix sums telescope so the result lands
  // exactly on the sphere.
  double S = 0.0, W = 0.0, t = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index j = order[static_cast<std::size_t>(k)];
    const double cand_S = S + ball.w[j] * std::abs(x[j]);
    const double cand_W = W + ball.w[j] * ball.w[j];
    const double cand_t = (cand_S - ball.radius) / cand_W;
    if (cand_t >= std::abs(x[j]) / ball.w[j]) break;
    S = cand_S;
    W = cand_W;
    t = cand_t;
  }

  RealVec y = RealVec::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double mag = std::abs(x[j]) - t * ball.w[j];
    if (mag > 0.0) y[j] = (x[j] > 0.0) ? mag : -mag;
  }
  return y;
}

AttractingOperator sparsity_projection_operator(const WeightedL1Ball& ball, double nu) {
  if (!(nu > 0.0 && nu < 2.0))
    throw std::invalid_argument("sparsity_projection_operator: nu must lie in (0, 2)");
  SparsityLoss loss(ball.w, ball.radius);
  auto apply = [o = loss.oracle(), nu](const RealVec& x) -> RealVec {
    return subgradient_projection_step(o, x, nu);
  };
  auto member = [ball](const RealVec& x) { return ball.contains(x); };
  return AttractingOperator(std::move(apply), (2.0 - nu) / nu, OperatorKind::SubgradientProjection,
                            std::move(member));
}

AttractingOperator exact_ball_operator(const WeightedL1Ball& ball) {
  if (ball.w.size() == 0) throw std::invalid_argument("exact_ball_operator: empty ball");
  auto apply = [ball](const RealVec& x) { return project_weighted_l1(x, ball); };
  auto member = [ball](const RealVec& x) { return ball.contains(x); };
  return AttractingOperator(std::move(apply), 1.0, OperatorKind::RelaxedProjection, std::move(member));
}

}  // namespace apsm
