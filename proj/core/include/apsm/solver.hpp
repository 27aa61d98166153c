#pragma once

#include <apsm/loss.hpp>
#include <apsm/operators.hpp>
#include <apsm/sparse.hpp>
#include <apsm/types.hpp>

#include <deque>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace apsm {

/// Step-size policy. lambda scales the loss-descent step and nu the relaxation
/// of the constraint operator; both stay inside (0, 2) by the guard margins.
/// zero_tol is the base of the scale-aware zero test :  zero_tol * (1 + |u|).
struct StepPolicy {
  double lambda = 1.0;
  double nu = 1.0;
  double lambda_guard = 1e-3;  ///< lambda must lie in [guard, 2 - guard]
  double nu_guard = 1e-3;      ///< nu must lie in [guard, 2 - guard]
  double zero_tol = 1e-12;

  void validate() const;
};

/// One diagnostics row per solver step. Fields a step cannot know are NaN.
struct StepDiagnostics {
  double loss_value = 0.0;       ///< Theta_n(u_n)
  double max_window_distance = 0.0;
  double step_norm = 0.0;        ///< |u_{n+1} - u_n|
  double dist_to_reference = 0.0;
  double phi_before = 0.0;       ///< Phi_n(u_n)
  double phi_after = 0.0;        ///< Phi_n(u_{n+1})
  double extrapolation = 0.0;    ///< M_n
  double step_scale = 0.0;       ///< mu_n
  std::size_t active_count = 0;
};

struct DiagnosticsLog {
  bool enabled = false;
  std::vector<StepDiagnostics> rows;
};

/// Mutable solver state. The window is a strict FIFO of the most recent
/// measurement slabs; capacity is enforced by the run driver.
struct SolverState {
  RealVec iterate;
  long step_index = 0;
  std::deque<Hyperslab> window;
  StepPolicy policy;
  DiagnosticsLog diagnostics;
  std::optional<RealVec> reference;  ///< optional v for |u_n - v| diagnostics

  static SolverState zero(Eigen::Index dim, StepPolicy policy = {});
};

/// Per-step report of the fused update.
struct FusedStepReport {
  double m_n = 1.0;     ///< extrapolation factor, >= 1 whenever the step moves
  double mu_n = 0.0;    ///< lambda * m_n, in (0, 2 m_n)
  std::size_t active_count = 0;
  double theta_value = 0.0;  ///< Theta_n(u_n)
  double phi_value = 0.0;    ///< Phi_n(u_{n+1}), 0 when no sparsity loss applies
};

/// One projected-subgradient step
///   u <- T( u - lambda (loss(u)/|g|^2) g ),  g = subgrad(u),
/// with the descent skipped when g vanishes (scale-aware test). Throws with
/// the step index on a non-finite intermediate.
void apsm_step(SolverState& state, const ConvexLossOracle& loss, const AttractingOperator& constraint);

/// Fused form of the same step for the window loss: the descent direction
/// collapses to an extrapolated convex combination of slab projections,
///   u <- T( u + mu_n (sum_i omega_i P_i(u) - u) ),  mu_n = lambda M_n,
/// where M_n = sum omega dist^2 / |sum omega (u - P_i u)|^2 >= 1 (set to 1
/// when the denominator vanishes or no slab is violated). The constraint is
/// the relaxed sparsity projection built from `sparsity` with the policy's nu.
FusedStepReport fused_step(SolverState& state, const SparsityLoss& sparsity);

/// Same update with an arbitrary constraint operator. phi_metric, when given,
/// only feeds the report and diagnostics.
FusedStepReport fused_step(SolverState& state, const AttractingOperator& constraint,
                           const SparsityLoss* phi_metric = nullptr);

/// Constraint flavor applied after the window step.
enum class ConstraintVariant {
  SubgradBall,  ///< relaxed subgradient projection onto the reweighted l1 ball
  ExactBall,    ///< exact projection onto the reweighted l1 ball
  Nlms,         ///< no constraint
};

/// Streaming-run options. q is the window capacity; xi the slab half-width;
/// rho and eps_check parameterize the reweighted l1 ball.
struct RunOptions {
  int q = 25;
  double xi = 0.0;
  double rho = 6.0;
  double eps_check = 0.005;
  ConstraintVariant variant = ConstraintVariant::SubgradBall;
  StepPolicy policy;

  void validate() const;
};

/// Classical normalized-gradient configuration: window of one exact slab
/// (xi = 0), no constraint, lambda = mu. One step then reduces to
///   u <- u + mu (d - a^T u)/|a|^2 a.
RunOptions nlms_options(double mu);

/// Pull-based sample stream; empty optional means exhausted.
using DataSource = std::function<std::optional<std::pair<RealVec, double>>()>;

/// Called after every completed step with the step ordinal and the new state.
using StepObserver = std::function<void(long, const SolverState&)>;

struct RunResult {
  long steps_completed = 0;
  std::vector<FusedStepReport> reports;
};

/// Drives fused steps over the stream: per sample, build a slab (zero
/// regressors are skipped and leave the iterate unchanged), push it into the
/// FIFO window, rebuild the ball weights from the current iterate, and step.
/// Stops cleanly when the source is exhausted.
RunResult run(SolverState& state, const DataSource& source, const RunOptions& opts, long num_steps,
              const StepObserver& observe = nullptr);

/// Largest per-step discrepancy between the generic projected-subgradient
/// path and the fused path over the same samples.
struct EquivalenceReport {
  long steps = 0;
  double max_abs_discrepancy = 0.0;
  double max_rel_discrepancy = 0.0;
  double tol = 0.0;
  bool pass = false;
};

/// At every sample both step rules are evaluated from the same predecessor
/// state, the iterate discrepancy is recorded, and the shared trajectory
/// advances with the fused result. The two options normally coincide;
/// passing different ones is for negative tests.
EquivalenceReport equivalence_check(const RealVec& u0,
                                    const std::vector<std::pair<RealVec, double>>& samples,
                                    const RunOptions& generic_opts, const RunOptions& fused_opts,
                                    double tol);

EquivalenceReport equivalence_check(const RealVec& u0,
                                    const std::vector<std::pair<RealVec, double>>& samples,
                                    const RunOptions& opts, double tol);

}  // namespace apsm
