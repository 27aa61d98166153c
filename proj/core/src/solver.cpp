#include <apsm/solver.hpp>

#include <cmath>
#include <limits>
#include <string>

namespace apsm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void push_slab(SolverState& state, Hyperslab slab, int q) {
  state.window.push_back(std::move(slab));
  while (static_cast<int>(state.window.size()) > q) state.window.pop_front();
}

/// Builds the per-step constraint for a variant from the current iterate.
/// For the ball variants the weights are rebuilt from the iterate, and the
/// matching sparsity loss is returned for reporting.
AttractingOperator variant_constraint(const RealVec& u, const RunOptions& opts,
                                      std::optional<SparsityLoss>& metric) {
  switch (opts.variant) {
    case ConstraintVariant::SubgradBall: {
      WeightedL1Ball ball{update_weights(u, opts.eps_check), opts.rho};
      metric.emplace(ball.w, ball.radius);
      return sparsity_projection_operator(ball, opts.policy.nu);
    }
    case ConstraintVariant::ExactBall: {
      WeightedL1Ball ball{update_weights(u, opts.eps_check), opts.rho};
      metric.emplace(ball.w, ball.radius);
      return exact_ball_operator(ball);
    }
    case ConstraintVariant::Nlms:
      metric.reset();
      return AttractingOperator::identity();
  }
  throw std::logic_error("variant_constraint: unknown variant");
}

[[noreturn]] void throw_non_finite(const char* where, long step) {
  throw std::runtime_error(std::string(where) + ": non-finite iterate at step " + std::to_string(step));
}

}  // namespace

void StepPolicy::validate() const {
  if (!(lambda_guard > 0.0 && lambda_guard <= 1.0))
    throw std::invalid_argument("StepPolicy: lambda_guard must lie in (0, 1]");
  if (!(nu_guard > 0.0 && nu_guard <= 1.0))
    throw std::invalid_argument("StepPolicy: nu_guard must lie in (0, 1]");
  if (!(lambda >= lambda_guard && lambda <= 2.0 - lambda_guard))
    throw std::invalid_argument("StepPolicy: lambda must lie in [guard, 2 - guard]");
  if (!(nu >= nu_guard && nu <= 2.0 - nu_guard))
    throw std::invalid_argument("StepPolicy: nu must lie in [guard, 2 - guard]");
  if (!(zero_tol > 0.0)) throw std::invalid_argument("StepPolicy: zero_tol must be positive");
}

void RunOptions::validate() const {
  if (q < 1) throw std::invalid_argument("RunOptions: q must be at least 1");
  if (!(xi >= 0.0)) throw std::invalid_argument("RunOptions: xi must be nonnegative");
  if (!(rho > 0.0)) throw std::invalid_argument("RunOptions: rho must be positive");
  if (!(eps_check > 0.0)) throw std::invalid_argument("RunOptions: eps_check must be positive");
  policy.validate();
}

SolverState SolverState::zero(Eigen::Index dim, StepPolicy policy) {
  SolverState s;
  s.iterate = RealVec::Zero(dim);
  s.policy = policy;
  return s;
}

void apsm_step(SolverState& state, const ConvexLossOracle& loss, const AttractingOperator& constraint) {
  state.policy.validate();
  const RealVec u = state.iterate;
  const double v = loss.value(u);
  if (!std::isfinite(v)) throw_non_finite("apsm_step", state.step_index);
  const RealVec g = loss.subgrad(u);
  if (!g.allFinite()) throw_non_finite("apsm_step", state.step_index);

  RealVec y = u;
  if (g.norm() > zero_threshold(u, state.policy.zero_tol))
    y -= state.policy.lambda * (v / g.squaredNorm()) * g;

  RealVec next = constraint(y);
  if (!next.allFinite()) throw_non_finite("apsm_step", state.step_index);

  if (state.diagnostics.enabled) {
    StepDiagnostics row;
    row.loss_value = v;
    row.max_window_distance = kNaN;
    row.step_norm = (next - u).norm();
    row.dist_to_reference = state.reference ? (u - *state.reference).norm() : kNaN;
    row.phi_before = kNaN;
    row.phi_after = kNaN;
    row.extrapolation = kNaN;
    row.step_scale = kNaN;
    state.diagnostics.rows.push_back(row);
  }

  state.iterate = std::move(next);
  ++state.step_index;
}

FusedStepReport fused_step(SolverState& state, const AttractingOperator& constraint,
                           const SparsityLoss* phi_metric) {
  state.policy.validate();
  const RealVec u = state.iterate;

  std::vector<Hyperslab> sets(state.window.begin(), state.window.end());
  WindowLoss window(std::move(sets), u);
  const LossEval ev = window.eval_at_anchor();

  FusedStepReport rep;
  rep.active_count = window.active_count();
  rep.theta_value = ev.value;

  RealVec y = u;
  double m = 1.0;
  if (rep.active_count > 0) {
    const RealVec disp = u - ev.weighted_projection;  // = sum_i omega_i (u - P_i(u))
    const double den = disp.squaredNorm();
    const double ztol = zero_threshold(u, state.policy.zero_tol);
    if (den > ztol * ztol) m = ev.weighted_sq_dist / den;
    y -= (state.policy.lambda * m) * disp;
  }
  rep.m_n = m;
  rep.mu_n = state.policy.lambda * m;

  RealVec next = constraint(y);
  if (!next.allFinite()) throw_non_finite("fused_step", state.step_index);
  rep.phi_value = phi_metric ? phi_metric->value(next) : 0.0;

  if (state.diagnostics.enabled) {
    StepDiagnostics row;
    row.loss_value = ev.value;
    row.max_window_distance = window.max_distance(u);
    row.step_norm = (next - u).norm();
    row.dist_to_reference = state.reference ? (u - *state.reference).norm() : kNaN;
    row.phi_before = phi_metric ? phi_metric->value(u) : kNaN;
    row.phi_after = phi_metric ? rep.phi_value : kNaN;
    row.extrapolation = rep.m_n;
    row.step_scale = rep.mu_n;
    row.active_count = rep.active_count;
    state.diagnostics.rows.push_back(row);
  }

  state.iterate = std::move(next);
  ++state.step_index;
  return rep;
}

FusedStepReport fused_step(SolverState& state, const SparsityLoss& sparsity) {
  WeightedL1Ball ball{sparsity.weights(), sparsity.rho()};
  return fused_step(state, sparsity_projection_operator(ball, state.policy.nu), &sparsity);
}

RunOptions nlms_options(double mu) {
  RunOptions opts;
  opts.q = 1;
  opts.xi = 0.0;
  opts.variant = ConstraintVariant::Nlms;
  opts.policy.lambda = mu;
  opts.validate();
  return opts;
}

RunResult run(SolverState& state, const DataSource& source, const RunOptions& opts, long num_steps,
              const StepObserver& observe) {
  opts.validate();
  state.policy = opts.policy;
  RunResult result;
  result.reports.reserve(static_cast<std::size_t>(std::max<long>(num_steps, 0)));

  for (long k = 0; k < num_steps; ++k) {
    auto sample = source();
    if (!sample) break;
    auto& [a, d] = *sample;

    if (a.squaredNorm() == 0.0) {
      // Zero regressor: no slab is formed and the iterate stays put.
      result.reports.push_back(FusedStepReport{});
      ++state.step_index;
    } else {
      push_slab(state, make_hyperslab(std::move(a), d, opts.xi), opts.q);
      std::optional<SparsityLoss> metric;
      const AttractingOperator constraint = variant_constraint(state.iterate, opts, metric);
      result.reports.push_back(fused_step(state, constraint, metric ? &*metric : nullptr));
    }

    ++result.steps_completed;
    if (observe) observe(k, state);
  }
  return result;
}

EquivalenceReport equivalence_check(const RealVec& u0,
                                    const std::vector<std::pair<RealVec, double>>& samples,
                                    const RunOptions& generic_opts, const RunOptions& fused_opts,
                                    double tol) {
  generic_opts.validate();
  fused_opts.validate();
  if (!(tol > 0.0)) throw std::invalid_argument("equivalence_check: tol must be positive");

  // Both step rules start from the same state at every step, so the report
  // measures the one-step algebraic identity itself; the shared trajectory
  // advances with the fused (production) result. Free-running trajectories
  // would instead measure roundoff amplified by the stream dynamics.
  SolverState a = SolverState::zero(u0.size(), generic_opts.policy);
  SolverState b = SolverState::zero(u0.size(), fused_opts.policy);
  a.iterate = u0;
  b.iterate = u0;

  EquivalenceReport rep;
  rep.tol = tol;
  for (const auto& [reg, d] : samples) {
    if (reg.squaredNorm() == 0.0) continue;

    // Generic path: explicit window loss oracle plus constraint operator.
    push_slab(a, make_hyperslab(reg, d, generic_opts.xi), generic_opts.q);
    {
      std::vector<Hyperslab> sets(a.window.begin(), a.window.end());
      WindowLoss window(std::move(sets), a.iterate);
      std::optional<SparsityLoss> metric;
      const AttractingOperator constraint = variant_constraint(a.iterate, generic_opts, metric);
      apsm_step(a, window.oracle(), constraint);
    }

    // Fused path from the same predecessor state.
    push_slab(b, make_hyperslab(reg, d, fused_opts.xi), fused_opts.q);
    {
      std::optional<SparsityLoss> metric;
      const AttractingOperator constraint = variant_constraint(b.iterate, fused_opts, metric);
      fused_step(b, constraint, metric ? &*metric : nullptr);
    }

    ++rep.steps;
    const double abs = (a.iterate - b.iterate).norm();
    const double rel = abs / (1.0 + b.iterate.norm());
    rep.max_abs_discrepancy = std::max(rep.max_abs_discrepancy, abs);
    rep.max_rel_discrepancy = std::max(rep.max_rel_discrepancy, rel);

    // Re-anchor the generic state on the fused iterate for the next step.
    a.iterate = b.iterate;
  }
  rep.pass = rep.max_rel_discrepancy <= tol;
  return rep;
}

EquivalenceReport equivalence_check(const RealVec& u0,
                                    const std::vector<std::pair<RealVec, double>>& samples,
                                    const RunOptions& opts, double tol) {
  return equivalence_check(u0, samples, opts, opts, tol);
}

}  // namespace apsm
