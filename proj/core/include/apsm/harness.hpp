#pragma once

#include <apsm/solver.hpp>
#include <apsm/types.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace apsm {

/// Scheduled replacement of the ground-truth system: the new coefficient
/// vector takes effect for the sample at 1-based time `step` and onward.
struct ChangeEvent {
  long step = 1;
  RealVec x;
};

/// Experiment description. An identification run draws an s-sparse system of
/// dimension `dim`, feeds a white Gaussian input through an L-tap shift
/// register (L = dim), observes d_n = a_n^T x + noise, and tracks the system
/// online. `num_samples` is the length of the emitted deviation series;
/// entry n is the squared deviation of the iterate after n samples, so a run
/// consumes num_samples - 1 samples.
struct ScenarioConfig {
  int dim = 100;
  int support_size = 5;
  double noise_variance = 0.1;
  long num_samples = 501;
  int runs = 50;
  std::uint64_t seed = 12345;

  int q = 25;
  double rho = 6.0;
  double eps_check = 0.005;
  double xi_factor = 2.0;  ///< xi = xi_factor * sqrt(noise_variance) ...
  double xi_absolute = -1.0;  ///< ... unless this is nonnegative, then xi = xi_absolute
  double lambda = 1.0;
  double nu = 1.0;
  ConstraintVariant variant = ConstraintVariant::SubgradBall;

  std::optional<RealVec> initial_system;  ///< fixed system instead of a random draw
  std::vector<ChangeEvent> change_schedule;

  int threads = 0;  ///< worker pool size; 0 picks hardware concurrency
  bool collect_diagnostics = false;

  double xi() const;
  RunOptions run_options() const;
  void validate() const;
};

/// Sparse ground truth: coefficient vector and its support.
struct GroundTruth {
  RealVec x;
  std::vector<Eigen::Index> support;
};

/// Substream seed for Monte-Carlo run r: the splitmix64 finalizer applied to
/// master + (r + 1) * golden gamma. Every run seeds its own mt19937_64 from
/// this, so results do not depend on how runs are scheduled across workers.
std::uint64_t run_seed(std::uint64_t master, int run_index);
std::mt19937_64 make_run_engine(std::uint64_t master, int run_index);

/// Draws the ground truth: support sampled uniformly without replacement,
/// values i.i.d. standard normal. A configured initial_system short-circuits
/// the draw and consumes no randomness.
GroundTruth gen_system(const ScenarioConfig& config, std::mt19937_64& engine);

/// System in effect for the sample at 1-based time `step` (step 0 and every
/// step before the first event give the initial system).
RealVec apply_change(const RealVec& initial, const std::vector<ChangeEvent>& schedule, long step);

/// Streaming measurement generator: scalar standard-normal input through an
/// L-tap shift register with zero prehistory, d = a^T x(t) + sigma * noise.
/// Sample t (1-based) uses the scheduled system at time t.
class DataStream {
 public:
  DataStream(const ScenarioConfig& config, GroundTruth truth, std::mt19937_64& engine);

  std::pair<RealVec, double> next();
  long samples_drawn() const { return count_; }

  /// Adapter for the solver driver; draws at most `limit` samples.
  DataSource source(long limit);

 private:
  const ScenarioConfig& config_;
  GroundTruth truth_;
  std::mt19937_64& engine_;
  RealVec reg_;
  double sigma_;
  long count_ = 0;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Materializes the first `count` samples of run r's stream. Used by tests;
/// the stream depends only on (config, master seed, run index), never on the
/// constraint variant.
std::vector<std::pair<RealVec, double>> materialize_stream(const ScenarioConfig& config,
                                                           int run_index, long count);

/// Mean squared deviation per sample count, averaged over runs.
struct MsdSeries {
  std::vector<double> msd;

  /// 10 log10(m); exact zero maps to -infinity.
  static double to_db(double m);
};

/// Per-step diagnostic means over runs plus global step-rule extremes.
struct AggregatedDiagnostics {
  std::vector<double> mean_theta;
  std::vector<double> mean_max_distance;
  std::vector<double> mean_phi_before;
  double min_extrapolation = 0.0;  ///< min over all steps/runs of M_n
  double min_mu = 0.0;
  double max_mu_over_m = 0.0;      ///< max of mu_n / M_n, must stay below 2
};

struct ExperimentResult {
  MsdSeries series;
  std::optional<AggregatedDiagnostics> diagnostics;
};

/// Runs the Monte-Carlo experiment. Runs execute on a worker pool; each owns
/// its solver state and RNG substream, and the averaged series is reduced in
/// run order, so the pool size never changes the output.
ExperimentResult run_experiment(const ScenarioConfig& config);

/// Writes `n,msd,msd_db` rows. Doubles render as shortest round-trip
/// decimals; msd = 0 renders its dB column as the literal -inf.
void emit_csv(const MsdSeries& series, std::ostream& out);
void emit_csv(const MsdSeries& series, const std::string& path);

/// Named experiment presets.
ScenarioConfig fig1_time_invariant();
ScenarioConfig fig2_time_varying();
ScenarioConfig preset_by_name(const std::string& name);
std::vector<std::string> preset_names();

/// Applies one `key = value` override; throws on unknown keys or bad values.
void apply_config_entry(ScenarioConfig& config, const std::string& key, const std::string& value);

/// Parses a flat key = value file ('#' starts a comment) into the config.
void load_config_file(ScenarioConfig& config, const std::string& path);

}  // namespace apsm
