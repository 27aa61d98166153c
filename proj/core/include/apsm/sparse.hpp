#pragma once

#include <apsm/loss.hpp>
#include <apsm/operators.hpp>
#include <apsm/types.hpp>

namespace apsm {

/// Builds a hyperslab from one linear measurement. Throws when a = 0 or
/// xi < 0 or any input is non-finite.
Hyperslab make_hyperslab(RealVec a, double d, double xi);

/// Iterate-driven reweighting w_j = 1 / (|u_j| + eps). Weights stay within
/// (0, 1/eps]; eps must be positive.
RealVec update_weights(const RealVec& u, double eps);

/// Exact metric projection onto a weighted l1 ball. Interior and boundary
/// points map to themselves; outside points land on the sphere
/// sum_j w_j |y_j| = radius with sign(y_j) in {0, sign(x_j)}. Runs in
/// O(L log L): sort |x_j|/w_j descending, then take the largest prefix whose
/// shrinkage t = (sum_prefix w|x| - radius)/(sum_prefix w^2) keeps every
/// prefix coordinate alive.
RealVec project_weighted_l1(const RealVec& x, const WeightedL1Ball& ball);

/// Relaxed subgradient projection operator for the hinge of the weighted l1
/// norm, nu in (0, 2). One step from outside lands on or inside the ball
/// when no coordinate crosses zero. (2 - nu)/nu attracting; fixed points are
/// exactly the ball.
AttractingOperator sparsity_projection_operator(const WeightedL1Ball& ball, double nu);

/// Exact projection onto the ball as a 1-attracting operator.
AttractingOperator exact_ball_operator(const WeightedL1Ball& ball);

}  // namespace apsm
