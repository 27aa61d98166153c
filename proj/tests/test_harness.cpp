#include <apsm/harness.hpp>

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

using apsm::ChangeEvent;
using apsm::DataStream;
using apsm::GroundTruth;
using apsm::MsdSeries;
using apsm::RealVec;
using apsm::ScenarioConfig;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

ScenarioConfig tiny_config() {
  ScenarioConfig cfg;
  cfg.dim = 10;
  cfg.support_size = 2;
  cfg.noise_variance = 0.01;
  cfg.num_samples = 40;
  cfg.runs = 5;
  cfg.seed = 2468;
  cfg.q = 5;
  cfg.rho = 4.0;
  cfg.threads = 1;
  return cfg;
}

}  // namespace

TEST_CASE("run seeds are deterministic and collision-free across runs and masters") {
  CHECK(apsm::run_seed(12345, 0) == apsm::run_seed(12345, 0));
  std::set<std::uint64_t> seen;
  for (std::uint64_t master : {1ull, 12345ull, 0xDEADBEEFull})
    for (int r = 0; r < 200; ++r) seen.insert(apsm::run_seed(master, r));
  CHECK(seen.size() == 600);
}

TEST_CASE("ground truth draws a sorted sparse support with normal values") {
  ScenarioConfig cfg = tiny_config();
  cfg.dim = 30;
  cfg.support_size = 5;

  auto engine = apsm::make_run_engine(cfg.seed, 0);
  const GroundTruth t = apsm::gen_system(cfg, engine);

  REQUIRE(t.support.size() == 5);
  for (std::size_t k = 1; k < t.support.size(); ++k) CHECK(t.support[k - 1] < t.support[k]);
  CHECK(t.support.front() >= 0);
  CHECK(t.support.back() < cfg.dim);

  int nonzeros = 0;
  for (Eigen::Index j = 0; j < t.x.size(); ++j)
    if (t.x[j] != 0.0) ++nonzeros;
  CHECK(nonzeros == 5);
  for (Eigen::Index j : t.support) CHECK(t.x[j] != 0.0);

  // A different run index draws a different system.
  auto engine1 = apsm::make_run_engine(cfg.seed, 1);
  const GroundTruth t1 = apsm::gen_system(cfg, engine1);
  CHECK((t.x - t1.x).norm() > 0.0);
}

TEST_CASE("a fixed initial system bypasses the draw and consumes no randomness") {
  ScenarioConfig cfg = tiny_config();
  RealVec fixed = RealVec::Zero(cfg.dim);
  fixed[3] = 1.5;
  fixed[7] = -2.0;
  cfg.initial_system = fixed;

  auto engine = apsm::make_run_engine(cfg.seed, 0);
  auto clone = engine;
  const GroundTruth t = apsm::gen_system(cfg, engine);

  CHECK((t.x - fixed).norm() == 0.0);
  REQUIRE(t.support.size() == 2);
  CHECK(t.support[0] == 3);
  CHECK(t.support[1] == 7);
  CHECK(engine() == clone());  // engine state untouched
}

TEST_CASE("data stream feeds the input through a zero-prehistory shift register") {
  ScenarioConfig cfg = tiny_config();
  cfg.dim = 4;
  cfg.support_size = 2;
  cfg.noise_variance = 0.0;  // every engine draw is a register input

  auto engine = apsm::make_run_engine(cfg.seed, 0);
  const GroundTruth t = apsm::gen_system(cfg, engine);

  auto clone = engine;
  std::normal_distribution<double> normal(0.0, 1.0);
  const double a0 = normal(clone);
  const double a1 = normal(clone);

  DataStream stream(cfg, t, engine);
  const auto [r0, d0] = stream.next();
  CHECK(r0[0] == a0);
  CHECK(r0[1] == 0.0);
  CHECK(r0[2] == 0.0);
  CHECK(r0[3] == 0.0);
  CHECK(d0 == r0.dot(t.x));  // noiseless observations are exact

  const auto [r1, d1] = stream.next();
  CHECK(r1[0] == a1);
  CHECK(r1[1] == a0);
  CHECK(r1[2] == 0.0);
  CHECK(d1 == r1.dot(t.x));
  CHECK(stream.samples_drawn() == 2);
}

TEST_CASE("materialized streams are reproducible and distinct across runs") {
  const ScenarioConfig cfg = tiny_config();
  const auto s1 = apsm::materialize_stream(cfg, 0, 20);
  const auto s2 = apsm::materialize_stream(cfg, 0, 20);
  const auto s3 = apsm::materialize_stream(cfg, 1, 20);

  REQUIRE(s1.size() == 20);
  bool identical = true;
  for (std::size_t k = 0; k < 20; ++k) {
    identical = identical && (s1[k].first - s2[k].first).norm() == 0.0 &&
                s1[k].second == s2[k].second;
  }
  CHECK(identical);
  CHECK((s1[0].first - s3[0].first).norm() > 0.0);
}

TEST_CASE("the stream never depends on the constraint variant") {
  ScenarioConfig a = tiny_config();
  ScenarioConfig b = tiny_config();
  a.variant = apsm::ConstraintVariant::SubgradBall;
  b.variant = apsm::ConstraintVariant::ExactBall;
  const auto sa = apsm::materialize_stream(a, 3, 10);
  const auto sb = apsm::materialize_stream(b, 3, 10);
  for (std::size_t k = 0; k < 10; ++k) {
    CHECK((sa[k].first - sb[k].first).norm() == 0.0);
    CHECK(sa[k].second == sb[k].second);
  }
}

TEST_CASE("scheduled changes take effect at their 1-based sample time") {
  const ScenarioConfig cfg = apsm::fig2_time_varying();
  REQUIRE(cfg.initial_system.has_value());
  REQUIRE(cfg.change_schedule.size() == 1);
  CHECK(cfg.change_schedule[0].step == 501);

  const RealVec& before = *cfg.initial_system;
  CHECK(before.sum() == 5.0);
  for (Eigen::Index j = 0; j < 5; ++j) CHECK(before[j] == 1.0);

  const RealVec& after = cfg.change_schedule[0].x;
  CHECK(after.sum() == 8.0);
  for (Eigen::Index j = 0; j <= 14; j += 2) CHECK(after[j] == 1.0);
  CHECK(after[1] == 0.0);

  CHECK((apsm::apply_change(before, cfg.change_schedule, 0) - before).norm() == 0.0);
  CHECK((apsm::apply_change(before, cfg.change_schedule, 500) - before).norm() == 0.0);
  CHECK((apsm::apply_change(before, cfg.change_schedule, 501) - after).norm() == 0.0);
  CHECK((apsm::apply_change(before, cfg.change_schedule, 1000) - after).norm() == 0.0);
}

TEST_CASE("a zero-sample experiment reports the initial deviation") {
  ScenarioConfig cfg;
  cfg.dim = 4;
  cfg.support_size = 0;
  cfg.num_samples = 1;
  cfg.runs = 1;
  cfg.threads = 1;
  cfg.initial_system = RealVec(RealVec::Ones(4));

  const auto result = apsm::run_experiment(cfg);
  REQUIRE(result.series.msd.size() == 1);
  CHECK(result.series.msd[0] == 4.0);  // |ones(4)|^2 from the zero start
}

TEST_CASE("noiseless feasible runs never move away from the truth") {
  ScenarioConfig cfg;
  cfg.dim = 20;
  cfg.support_size = 0;
  cfg.noise_variance = 0.0;
  cfg.xi_absolute = 0.01;
  cfg.num_samples = 201;
  cfg.runs = 1;
  cfg.threads = 1;
  cfg.q = 10;
  RealVec truth = RealVec::Zero(20);
  truth[0] = truth[7] = truth[13] = 1.0;
  cfg.initial_system = truth;
  cfg.rho = truth.lpNorm<1>() / cfg.eps_check + 100.0;  // truth stays inside the ball

  const auto result = apsm::run_experiment(cfg);
  REQUIRE(result.series.msd.size() == 201);
  for (std::size_t n = 1; n < result.series.msd.size(); ++n)
    CHECK(result.series.msd[n] <= result.series.msd[n - 1] + 1e-10);
  CHECK(result.series.msd.back() < result.series.msd.front());
}

TEST_CASE("converged noiseless iterates keep their reweighted norm inside the radius") {
  // With the radius at least the support size, the limit weights give each
  // live coordinate a contribution just under one, so the iterate's own
  // reweighted norm must settle at or below the radius after the transient.
  ScenarioConfig base;
  base.dim = 30;
  base.support_size = 0;
  base.noise_variance = 0.0;
  base.xi_absolute = 0.01;
  base.num_samples = 1501;
  base.runs = 1;
  base.threads = 1;
  base.q = 10;
  base.rho = 5.0;  // support size 3 plus slack
  RealVec truth = RealVec::Zero(30);
  truth[4] = 1.1;
  truth[12] = -0.9;
  truth[21] = 1.3;
  base.initial_system = truth;
  base.validate();

  const auto samples = apsm::materialize_stream(base, 0, 1500);
  std::size_t pos = 0;
  const apsm::DataSource source = [&]() -> std::optional<std::pair<RealVec, double>> {
    if (pos >= samples.size()) return std::nullopt;
    return samples[pos++];
  };

  const long burn_in = 600;
  double worst_late_norm = 0.0;
  apsm::SolverState state = apsm::SolverState::zero(base.dim);
  const auto result = apsm::run(state, source, base.run_options(), 1500,
                                [&](long step, const apsm::SolverState& st) {
                                  if (step < burn_in) return;
                                  const RealVec w = apsm::update_weights(st.iterate, base.eps_check);
                                  worst_late_norm = std::max(worst_late_norm, w.dot(st.iterate.cwiseAbs()));
                                });
  REQUIRE(result.steps_completed == 1500);
  CHECK(worst_late_norm > 0.0);
  CHECK(worst_late_norm <= base.rho + 1e-6);
}

TEST_CASE("decibel conversion") {
  CHECK(MsdSeries::to_db(1.0) == 0.0);
  CHECK(MsdSeries::to_db(100.0) == doctest::Approx(20.0).epsilon(1e-15));
  CHECK(MsdSeries::to_db(0.0) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("csv output uses shortest round-trip decimals and an -inf literal") {
  MsdSeries series;
  series.msd = {1.0, 0.5, 0.0};
  std::ostringstream out;
  apsm::emit_csv(series, out);

  const auto lines = split(out.str(), '\n');
  REQUIRE(lines.size() == 5);  // header + 3 rows + trailing empty
  CHECK(lines[0] == "n,msd,msd_db");
  CHECK(lines[1] == "0,1,0");
  CHECK(lines[3] == "2,0,-inf");
  CHECK(lines[4].empty());

  const auto row1 = split(lines[2], ',');
  REQUIRE(row1.size() == 3);
  CHECK(row1[0] == "1");
  CHECK(std::stod(row1[1]) == 0.5);
  CHECK(std::stod(row1[2]) == MsdSeries::to_db(0.5));  // exact round trip
}

TEST_CASE("csv file overload writes the same bytes and rejects bad paths") {
  MsdSeries series;
  series.msd = {2.0, 0.0};
  const std::string path = "harness_csv_test_tmp.csv";
  apsm::emit_csv(series, path);

  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream content;
  content << in.rdbuf();
  std::ostringstream direct;
  apsm::emit_csv(series, direct);
  CHECK(content.str() == direct.str());
  in.close();
  std::remove(path.c_str());

  CHECK_THROWS_WITH_AS(apsm::emit_csv(series, "/nonexistent_dir_zz/x.csv"),
                       doctest::Contains("cannot open"), std::runtime_error);
}

TEST_CASE("presets are available by CLI name") {
  const auto names = apsm::preset_names();
  REQUIRE(names.size() == 2);
  CHECK(names[0] == "fig1-time-invariant");
  CHECK(names[1] == "fig2-time-varying");

  const ScenarioConfig f1 = apsm::preset_by_name("fig1-time-invariant");
  CHECK(f1.dim == 100);
  CHECK(f1.support_size == 5);
  CHECK(f1.num_samples == 501);
  CHECK(f1.runs == 50);
  CHECK(f1.q == 25);
  CHECK(f1.rho == 6.0);
  CHECK(f1.xi() == doctest::Approx(2.0 * std::sqrt(0.1)).epsilon(1e-15));

  const ScenarioConfig f2 = apsm::preset_by_name("fig2-time-varying");
  CHECK(f2.rho == 9.0);
  CHECK(f2.num_samples == 1001);

  CHECK_THROWS_WITH_AS(apsm::preset_by_name("fig3"), doctest::Contains("unknown preset"),
                       std::invalid_argument);
}

TEST_CASE("config entries override fields and reject unknown keys") {
  ScenarioConfig cfg;
  apsm::apply_config_entry(cfg, "dim", "12");
  apsm::apply_config_entry(cfg, "rho", "3.5");
  apsm::apply_config_entry(cfg, "variant", "exact-ball");
  apsm::apply_config_entry(cfg, "xi", "0.3");
  apsm::apply_config_entry(cfg, "seed", "999");
  CHECK(cfg.dim == 12);
  CHECK(cfg.rho == 3.5);
  CHECK(cfg.variant == apsm::ConstraintVariant::ExactBall);
  CHECK(cfg.xi() == 0.3);
  CHECK(cfg.seed == 999);

  CHECK_THROWS_WITH_AS(apsm::apply_config_entry(cfg, "bogus", "1"),
                       doctest::Contains("unknown key"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(apsm::apply_config_entry(cfg, "dim", "twelve"),
                       doctest::Contains("bad integer"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(apsm::apply_config_entry(cfg, "variant", "banana"),
                       doctest::Contains("unknown variant"), std::invalid_argument);
}

TEST_CASE("config files parse comments and report line numbers on errors") {
  const std::string path = "harness_cfg_test_tmp.cfg";
  {
    std::ofstream f(path);
    f << "# experiment overrides\n"
      << "dim = 12\n"
      << "rho=3.5   # trailing comment\n"
      << "\n"
      << "  variant = nlms\n";
  }
  ScenarioConfig cfg;
  apsm::load_config_file(cfg, path);
  CHECK(cfg.dim == 12);
  CHECK(cfg.rho == 3.5);
  CHECK(cfg.variant == apsm::ConstraintVariant::Nlms);
  std::remove(path.c_str());

  {
    std::ofstream f(path);
    f << "dim = 12\n"
      << "rho 3.5\n";
  }
  CHECK_THROWS_WITH_AS(apsm::load_config_file(cfg, path), doctest::Contains(":2:"),
                       std::runtime_error);
  std::remove(path.c_str());

  CHECK_THROWS_WITH_AS(apsm::load_config_file(cfg, "no_such_file_zz.cfg"),
                       doctest::Contains("cannot open"), std::runtime_error);
}

TEST_CASE("experiment output is independent of the worker pool size") {
  ScenarioConfig cfg = tiny_config();
  cfg.threads = 1;
  const auto r1 = apsm::run_experiment(cfg);
  cfg.threads = 3;
  const auto r3 = apsm::run_experiment(cfg);

  REQUIRE(r1.series.msd.size() == r3.series.msd.size());
  bool identical = true;
  for (std::size_t n = 0; n < r1.series.msd.size(); ++n)
    identical = identical && r1.series.msd[n] == r3.series.msd[n];
  CHECK(identical);
}

TEST_CASE("scenario validation rejects inconsistent settings") {
  ScenarioConfig cfg = tiny_config();
  CHECK_NOTHROW(cfg.validate());

  ScenarioConfig bad = cfg;
  bad.dim = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.support_size = cfg.dim + 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.noise_variance = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.num_samples = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.runs = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.threads = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.initial_system = RealVec(RealVec::Ones(3));
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.change_schedule = {ChangeEvent{5, RealVec::Ones(cfg.dim)},
                         ChangeEvent{5, RealVec::Ones(cfg.dim)}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.change_schedule = {ChangeEvent{0, RealVec::Ones(cfg.dim)}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.change_schedule = {ChangeEvent{5, RealVec::Ones(cfg.dim + 2)}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.lambda = 3.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
