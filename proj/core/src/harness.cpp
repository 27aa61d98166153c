#include <apsm/harness.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace apsm {

namespace {

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ull;

std::uint64_t splitmix64_finalize(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad numeric value for '" + key + "': " + value);
  }
}

long long parse_integer(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer value for '" + key + "': " + value);
  }
}

std::uint64_t parse_uint64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad unsigned value for '" + key + "': " + value);
  }
}

ConstraintVariant parse_variant(const std::string& value) {
  if (value == "subgrad-ball") return ConstraintVariant::SubgradBall;
  if (value == "exact-ball") return ConstraintVariant::ExactBall;
  if (value == "nlms") return ConstraintVariant::Nlms;
  throw std::invalid_argument("config: unknown variant '" + value +
                              "' (expected subgrad-ball, exact-ball, or nlms)");
}

void render_double(std::ostream& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, res.ptr - buf);
}

struct RunOutput {
  std::vector<double> sq_dev;
  std::vector<StepDiagnostics> diag_rows;
};

RunOutput run_single(const ScenarioConfig& config, int run_index) {
  std::mt19937_64 engine = make_run_engine(config.seed, run_index);
  const GroundTruth truth = gen_system(config, engine);
  DataStream stream(config, truth, engine);

  SolverState state = SolverState::zero(config.dim, config.run_options().policy);
  state.diagnostics.enabled = config.collect_diagnostics;

  RunOutput out;
  out.sq_dev.resize(static_cast<std::size_t>(config.num_samples));
  out.sq_dev[0] = (apply_change(truth.x, config.change_schedule, 0) - state.iterate).squaredNorm();

  DataSource source = stream.source(config.num_samples - 1);
  run(state, source, config.run_options(), config.num_samples - 1,
      [&](long k, const SolverState& s) {
        const RealVec ref = apply_change(truth.x, config.change_schedule, k + 1);
        out.sq_dev[static_cast<std::size_t>(k) + 1] = (ref - s.iterate).squaredNorm();
      });

  out.diag_rows = std::move(state.diagnostics.rows);
  return out;
}

}  // namespace

double ScenarioConfig::xi() const {
  return xi_absolute >= 0.0 ? xi_absolute : xi_factor * std::sqrt(noise_variance);
}

RunOptions ScenarioConfig::run_options() const {
  RunOptions opts;
  opts.q = q;
  opts.xi = xi();
  opts.rho = rho;
  opts.eps_check = eps_check;
  opts.variant = variant;
  opts.policy.lambda = lambda;
  opts.policy.nu = nu;
  return opts;
}

void ScenarioConfig::validate() const {
  if (dim < 1) throw std::invalid_argument("ScenarioConfig: dim must be at least 1");
  if (support_size < 0 || support_size > dim)
    throw std::invalid_argument("ScenarioConfig: support_size must lie in [0, dim]");
  if (!(noise_variance >= 0.0))
    throw std::invalid_argument("ScenarioConfig: noise_variance must be nonnegative");
  if (num_samples < 1) throw std::invalid_argument("ScenarioConfig: num_samples must be at least 1");
  if (runs < 1) throw std::invalid_argument("ScenarioConfig: runs must be at least 1");
  if (threads < 0) throw std::invalid_argument("ScenarioConfig: threads must be nonnegative");
  if (initial_system && initial_system->size() != dim)
    throw std::invalid_argument("ScenarioConfig: initial_system dimension mismatch");
  long prev = 0;
  for (const ChangeEvent& ev : change_schedule) {
    if (ev.step < 1) throw std::invalid_argument("ScenarioConfig: change steps start at 1");
    if (ev.step <= prev)
      throw std::invalid_argument("ScenarioConfig: change schedule must be strictly increasing");
    if (ev.x.size() != dim) throw std::invalid_argument("ScenarioConfig: change dimension mismatch");
    require_finite(ev.x, "ScenarioConfig: change system");
    prev = ev.step;
  }
  run_options().validate();
}

std::uint64_t run_seed(std::uint64_t master, int run_index) {
  return splitmix64_finalize(master + kGoldenGamma * (static_cast<std::uint64_t>(run_index) + 1));
}

std::mt19937_64 make_run_engine(std::uint64_t master, int run_index) {
  return std::mt19937_64(run_seed(master, run_index));
}

GroundTruth gen_system(const ScenarioConfig& config, std::mt19937_64& engine) {
  GroundTruth truth;
  if (config.initial_system) {
    truth.x = *config.initial_system;
    for (Eigen::Index j = 0; j < truth.x.size(); ++j)
      if (truth.x[j] != 0.0) truth.support.push_back(j);
    return truth;
  }

  // Partial Fisher-Yates draw of the support, then i.i.d. normal values on it.
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(config.dim));
  std::iota(pool.begin(), pool.end(), 0);
  for (int k = 0; k < config.support_size; ++k) {
    std::uniform_int_distribution<int> pick(k, config.dim - 1);
    std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(pick(engine))]);
  }
  truth.support.assign(pool.begin(), pool.begin() + config.support_size);
  std::sort(truth.support.begin(), truth.support.end());

  truth.x = RealVec::Zero(config.dim);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index j : truth.support) truth.x[j] = normal(engine);
  return truth;
}

RealVec apply_change(const RealVec& initial, const std::vector<ChangeEvent>& schedule, long step) {
  const RealVec* current = &initial;
  for (const ChangeEvent& ev : schedule) {
    if (ev.step > step) break;
    current = &ev.x;
  }
  return *current;
}

DataStream::DataStream(const ScenarioConfig& config, GroundTruth truth, std::mt19937_64& engine)
    : config_(config), truth_(std::move(truth)), engine_(engine) {
  config_.validate();
  if (truth_.x.size() != config_.dim)
    throw std::invalid_argument("DataStream: ground truth dimension mismatch");
  reg_ = RealVec::Zero(config_.dim);
  sigma_ = std::sqrt(config_.noise_variance);
}

std::pair<RealVec, double> DataStream::next() {
  // Shift register, newest first; prehistory is zero.
  for (Eigen::Index j = reg_.size() - 1; j > 0; --j) reg_[j] = reg_[j - 1];
  reg_[0] = normal_(engine_);
  ++count_;

  const RealVec x = apply_change(truth_.x, config_.change_schedule, count_);
  double d = reg_.dot(x);
  if (sigma_ > 0.0) d += sigma_ * normal_(engine_);
  return {reg_, d};
}

DataSource DataStream::source(long limit) {
  long remaining = std::max<long>(limit, 0);
  return [this, remaining]() mutable -> std::optional<std::pair<RealVec, double>> {
    if (remaining == 0) return std::nullopt;
    --remaining;
    return next();
  };
}

std::vector<std::pair<RealVec, double>> materialize_stream(const ScenarioConfig& config,
                                                           int run_index, long count) {
  std::mt19937_64 engine = make_run_engine(config.seed, run_index);
  const GroundTruth truth = gen_system(config, engine);
  DataStream stream(config, truth, engine);
  std::vector<std::pair<RealVec, double>> samples;
  samples.reserve(static_cast<std::size_t>(std::max<long>(count, 0)));
  for (long k = 0; k < count; ++k) samples.push_back(stream.next());
  return samples;
}

double MsdSeries::to_db(double m) {
  if (m == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(m);
}

ExperimentResult run_experiment(const ScenarioConfig& config) {
  config.validate();

  const int runs = config.runs;
  std::vector<RunOutput> outputs(static_cast<std::size_t>(runs));
  int workers = config.threads > 0 ? config.threads
                                   : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, runs);

  std::atomic<int> next_run{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto work = [&]() {
    for (;;) {
      const int r = next_run.fetch_add(1);
      if (r >= runs) return;
      try {
        outputs[static_cast<std::size_t>(r)] = run_single(config, r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  // Reduce in run order so the pool size never shows in the output.
  ExperimentResult result;
  result.series.msd.assign(static_cast<std::size_t>(config.num_samples), 0.0);
  for (int r = 0; r < runs; ++r)
    for (std::size_t n = 0; n < result.series.msd.size(); ++n)
      result.series.msd[n] += outputs[static_cast<std::size_t>(r)].sq_dev[n];
  for (double& v : result.series.msd) v /= static_cast<double>(runs);

  if (config.collect_diagnostics) {
    std::size_t rows = std::numeric_limits<std::size_t>::max();
    for (const RunOutput& out : outputs) rows = std::min(rows, out.diag_rows.size());
    if (rows > 0 && rows != std::numeric_limits<std::size_t>::max()) {
      AggregatedDiagnostics diag;
      diag.mean_theta.assign(rows, 0.0);
      diag.mean_max_distance.assign(rows, 0.0);
      diag.mean_phi_before.assign(rows, 0.0);
      diag.min_extrapolation = std::numeric_limits<double>::infinity();
      diag.min_mu = std::numeric_limits<double>::infinity();
      diag.max_mu_over_m = 0.0;
      for (const RunOutput& out : outputs) {
        for (std::size_t s = 0; s < rows; ++s) {
          diag.mean_theta[s] += out.diag_rows[s].loss_value;
          diag.mean_max_distance[s] += out.diag_rows[s].max_window_distance;
          diag.mean_phi_before[s] += out.diag_rows[s].phi_before;
        }
        for (const StepDiagnostics& row : out.diag_rows) {
          diag.min_extrapolation = std::min(diag.min_extrapolation, row.extrapolation);
          diag.min_mu = std::min(diag.min_mu, row.step_scale);
          diag.max_mu_over_m = std::max(diag.max_mu_over_m, row.step_scale / row.extrapolation);
        }
      }
      const double inv = 1.0 / static_cast<double>(runs);
      for (std::size_t s = 0; s < rows; ++s) {
        diag.mean_theta[s] *= inv;
        diag.mean_max_distance[s] *= inv;
        diag.mean_phi_before[s] *= inv;
      }
      result.diagnostics = std::move(diag);
    }
  }
  return result;
}

void emit_csv(const MsdSeries& series, std::ostream& out) {
  out << "n,msd,msd_db\n";
  for (std::size_t n = 0; n < series.msd.size(); ++n) {
    out << n << ',';
    render_double(out, series.msd[n]);
    out << ',';
    render_double(out, MsdSeries::to_db(series.msd[n]));
    out << '\n';
  }
}

void emit_csv(const MsdSeries& series, const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("emit_csv: cannot open " + path);
  emit_csv(series, file);
  file.flush();
  if (!file) throw std::runtime_error("emit_csv: write failed for " + path);
}

ScenarioConfig fig1_time_invariant() {
  ScenarioConfig config;
  config.dim = 100;
  config.support_size = 5;
  config.noise_variance = 0.1;
  config.num_samples = 501;
  config.runs = 50;
  config.seed = 12345;
  config.q = 25;
  config.rho = 6.0;
  config.eps_check = 0.005;
  config.xi_factor = 2.0;
  config.lambda = 1.0;
  // With this relaxation the subgradient and exact ball constraints track
  // each other closely, which is the comparison the preset exists to show.
  config.nu = 1.5;
  config.variant = ConstraintVariant::SubgradBall;
  return config;
}

ScenarioConfig fig2_time_varying() {
  ScenarioConfig config = fig1_time_invariant();
  config.rho = 9.0;
  config.num_samples = 1001;

  RealVec before = RealVec::Zero(config.dim);
  for (Eigen::Index j = 0; j < 5; ++j) before[j] = 1.0;
  config.initial_system = before;

  RealVec after = RealVec::Zero(config.dim);
  for (Eigen::Index j = 0; j <= 14; j += 2) after[j] = 1.0;
  config.change_schedule = {ChangeEvent{501, after}};
  return config;
}

ScenarioConfig preset_by_name(const std::string& name) {
  if (name == "fig1-time-invariant") return fig1_time_invariant();
  if (name == "fig2-time-varying") return fig2_time_varying();
  throw std::invalid_argument("unknown preset '" + name +
                              "' (expected fig1-time-invariant or fig2-time-varying)");
}

std::vector<std::string> preset_names() { return {"fig1-time-invariant", "fig2-time-varying"}; }

void apply_config_entry(ScenarioConfig& config, const std::string& key, const std::string& value) {
  if (key == "dim") config.dim = static_cast<int>(parse_integer(key, value));
  else if (key == "support_size") config.support_size = static_cast<int>(parse_integer(key, value));
  else if (key == "noise_variance") config.noise_variance = parse_double(key, value);
  else if (key == "num_samples") config.num_samples = static_cast<long>(parse_integer(key, value));
  else if (key == "runs") config.runs = static_cast<int>(parse_integer(key, value));
  else if (key == "seed") config.seed = parse_uint64(key, value);
  else if (key == "q") config.q = static_cast<int>(parse_integer(key, value));
  else if (key == "rho") config.rho = parse_double(key, value);
  else if (key == "eps_check") config.eps_check = parse_double(key, value);
  else if (key == "xi_factor") config.xi_factor = parse_double(key, value);
  else if (key == "xi") config.xi_absolute = parse_double(key, value);
  else if (key == "lambda") config.lambda = parse_double(key, value);
  else if (key == "nu") config.nu = parse_double(key, value);
  else if (key == "variant") config.variant = parse_variant(value);
  else if (key == "threads") config.threads = static_cast<int>(parse_integer(key, value));
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

void load_config_file(ScenarioConfig& config, const std::string& path) {
  std::ifstream file(path);
  if (!file) throw std::runtime_error("config: cannot open " + path);
  std::string line;
  long line_no = 0;
  while (std::getline(file, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string entry = trim(line);
    if (entry.empty()) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(entry.substr(0, eq));
    const std::string value = trim(entry.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key = value");
    try {
      apply_config_entry(config, key, value);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace apsm
