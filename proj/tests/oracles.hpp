// Test-side oracles. Each one recomputes a quantity the library produces in
// closed form by a deliberately different route (grid search, line search,
// first-order conditions), so library and oracle can only agree if both are
// right.
#pragma once

#include <apsm/types.hpp>

#include <array>
#include <cmath>
#include <limits>

namespace oracles {

/// Nearest feasible point of a hyperslab along the regressor direction. The
/// metric projection onto a slab moves only along a, and on the segment from
/// x to the slab's center hyperplane the membership residual decreases
/// monotonically, so bisecting that residual's sign change finds the nearest
/// boundary crossing without any projection algebra.
inline apsm::RealVec slab_line_search(const apsm::RealVec& x, const apsm::Hyperslab& slab) {
  const double an2 = slab.a.squaredNorm();
  const double r = slab.d - slab.a.dot(x);
  auto violation = [&](double c) { return std::abs(r - c * an2) - slab.xi; };

  if (violation(0.0) <= 0.0) return x;
  double infeasible = 0.0;
  double feasible = r / an2;  // center of the slab along the line
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (infeasible + feasible);
    (violation(mid) <= 0.0 ? feasible : infeasible) = mid;
  }
  return x + feasible * slab.a;
}

namespace detail {

struct GridBest {
  double cost = std::numeric_limits<double>::infinity();
  apsm::RealVec point;
};

}  // namespace detail

/// Brute-force minimizer of |x - y| over the weighted l1 sphere
/// sum_j w_j |y_j| = radius in dimension 2: per sign pattern the sphere is a
/// segment y(t) = (s1 t / w1, s2 (radius - t) / w2), searched by a zoomed
/// grid over t.
inline apsm::RealVec l1_sphere_brute_force_2d(const apsm::RealVec& x, const apsm::WeightedL1Ball& ball) {
  detail::GridBest best;
  for (int s1 : {-1, 1}) {
    for (int s2 : {-1, 1}) {
      double lo = 0.0, hi = ball.radius;
      double best_t = 0.0;
      for (int level = 0; level < 8; ++level) {
        const int n = 600;
        const double h = (hi - lo) / n;
        double level_cost = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= n; ++i) {
          const double t = lo + h * i;
          const double y1 = s1 * t / ball.w[0];
          const double y2 = s2 * (ball.radius - t) / ball.w[1];
          const double f = (x[0] - y1) * (x[0] - y1) + (x[1] - y2) * (x[1] - y2);
          if (f < level_cost) {
            level_cost = f;
            best_t = t;
          }
        }
        if (level_cost < best.cost) {
          best.cost = level_cost;
          best.point = apsm::RealVec(2);
          best.point << s1 * best_t / ball.w[0], s2 * (ball.radius - best_t) / ball.w[1];
        }
        lo = std::max(0.0, best_t - 3.0 * h);
        hi = std::min(ball.radius, best_t + 3.0 * h);
      }
    }
  }
  return best.point;
}

/// Same idea in dimension 3: per sign pattern the sphere is the simplex
/// patch y(t1, t2) with w-scaled coordinates, searched by a zoomed 2-D grid.
inline apsm::RealVec l1_sphere_brute_force_3d(const apsm::RealVec& x, const apsm::WeightedL1Ball& ball) {
  detail::GridBest best;
  const double rho = ball.radius;
  for (int s1 : {-1, 1}) {
    for (int s2 : {-1, 1}) {
      for (int s3 : {-1, 1}) {
        double lo1 = 0.0, hi1 = rho, lo2 = 0.0, hi2 = rho;
        double b1 = 0.0, b2 = 0.0;
        for (int level = 0; level < 7; ++level) {
          const int n = 80;
          const double h1 = (hi1 - lo1) / n;
          const double h2 = (hi2 - lo2) / n;
          double level_cost = std::numeric_limits<double>::infinity();
          for (int i = 0; i <= n; ++i) {
            const double t1 = lo1 + h1 * i;
            if (t1 > rho) break;
            for (int j = 0; j <= n; ++j) {
              const double t2 = lo2 + h2 * j;
              if (t1 + t2 > rho) break;
              const double y1 = s1 * t1 / ball.w[0];
              const double y2 = s2 * t2 / ball.w[1];
              const double y3 = s3 * (rho - t1 - t2) / ball.w[2];
              const double f = (x[0] - y1) * (x[0] - y1) + (x[1] - y2) * (x[1] - y2) +
                               (x[2] - y3) * (x[2] - y3);
              if (f < level_cost) {
                level_cost = f;
                b1 = t1;
                b2 = t2;
              }
            }
          }
          if (level_cost < best.cost) {
            best.cost = level_cost;
            best.point = apsm::RealVec(3);
            best.point << s1 * b1 / ball.w[0], s2 * b2 / ball.w[1], s3 * (rho - b1 - b2) / ball.w[2];
          }
          lo1 = std::max(0.0, b1 - 3.0 * h1);
          hi1 = std::min(rho, b1 + 3.0 * h1);
          lo2 = std::max(0.0, b2 - 3.0 * h2);
          hi2 = std::min(rho, b2 + 3.0 * h2);
        }
      }
    }
  }
  return best.point;
}

inline apsm::RealVec l1_sphere_brute_force(const apsm::RealVec& x, const apsm::WeightedL1Ball& ball) {
  if (x.size() == 2) return l1_sphere_brute_force_2d(x, ball);
  if (x.size() == 3) return l1_sphere_brute_force_3d(x, ball);
  throw std::logic_error("l1_sphere_brute_force: only dimensions 2 and 3");
}

/// First-order optimality residual of a claimed projection p of x onto the
/// ball: on the support the residual x - p must be a common nonnegative
/// multiple t of w sign(p), off the support |x_j| <= t w_j, and p must sit on
/// the sphere. Returns the largest violation over all conditions.
inline double l1_projection_kkt_residual(const apsm::RealVec& x, const apsm::RealVec& p,
                                         const apsm::WeightedL1Ball& ball) {
  double worst = 0.0;
  worst = std::max(worst, std::abs(ball.weighted_norm(p) - ball.radius) / (1.0 + ball.radius));

  double t = 0.0;
  int support = 0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (p[j] != 0.0) {
      const double s = p[j] > 0.0 ? 1.0 : -1.0;
      if (s * x[j] < 0.0) return 1.0;  // sign flip: immediately wrong
      t += (x[j] - p[j]) / (ball.w[j] * s);
      ++support;
    }
  }
  if (support == 0) return 1.0;
  t /= support;
  worst = std::max(worst, -t);

  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (p[j] != 0.0) {
      const double s = p[j] > 0.0 ? 1.0 : -1.0;
      const double tj = (x[j] - p[j]) / (ball.w[j] * s);
      worst = std::max(worst, std::abs(tj - t) / (1.0 + std::abs(t)));
    } else {
      worst = std::max(worst, (std::abs(x[j]) - t * ball.w[j]) / (1.0 + t * ball.w[j]));
    }
  }
  return worst;
}

}  // namespace oracles
