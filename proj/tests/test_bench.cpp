#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "symplectic/bench.hpp"
#include "symplectic/problems.hpp"
#include "symplectic/splitting.hpp"

namespace sy = symplectic;
using oracle::Big;

namespace {

sy::Trajectory trajectory_of(std::size_t dim, const std::vector<std::vector<double>>& rows, double h = 1.0) {
  sy::Trajectory t(dim);
  for (std::size_t n = 0; n < rows.size(); ++n) t.push(h * static_cast<double>(n), rows[n], n == 0 ? 0 : 1);
  t.steps = static_cast<std::int64_t>(rows.size()) - 1;
  return t;
}

// Energy that reads it straight from the first component.
const sy::EnergyFunction kFirst = [](std::span<const double> y) { return y[0]; };

sy::RunSpec henon_heiles(const std::string& method, double h, double tf) {
  sy::RunSpec s;
  s.problem = "henon-heiles";
  s.method = method;
  s.h = h;
  s.tf = tf;
  s.repeat = 1;
  return s;
}

}  // namespace

TEST(LocalEnergyError, Examples) {
  EXPECT_EQ(sy::local_energy_error_max(trajectory_of(1, {{2.0}, {2.0}, {2.0}}), kFirst), 0.0);
  EXPECT_EQ(sy::local_energy_error_max(trajectory_of(1, {{1.0}, {1.0 + 1e-12}}), kFirst),
            std::fabs(((1.0 + 1e-12) - 1.0) / 1.0));
  EXPECT_EQ(sy::local_energy_error_max(trajectory_of(1, {{1.0}}), kFirst), 0.0);
  // Consecutive, not cumulative: 1 -> 2 -> 1 gives max(1, 0.5).
  EXPECT_EQ(sy::local_energy_error_max(trajectory_of(1, {{1.0}, {2.0}, {1.0}}), kFirst), 1.0);
  EXPECT_THROW(sy::local_energy_error_max(trajectory_of(1, {{0.0}, {1.0}}), kFirst), sy::MetricError);
}

TEST(LocalEnergyError, ExactFlowIsAtRoundOff) {
  // Harmonic oscillator sampled from its exact solution.
  std::vector<std::vector<double>> rows;
  for (int n = 0; n <= 1000; ++n) rows.push_back({std::cos(0.01 * n), -std::sin(0.01 * n)});
  const auto traj = trajectory_of(2, rows, 0.01);
  const sy::EnergyFunction h = [](std::span<const double> y) { return 0.5 * (y[0] * y[0] + y[1] * y[1]); };
  EXPECT_LT(sy::local_energy_error_max(traj, h), 4 * std::numeric_limits<double>::epsilon());
  EXPECT_LT(sy::global_energy_error_series(traj, h).max, 8 * std::numeric_limits<double>::epsilon());
}

TEST(LocalEnergyError, StrangOnHenonHeilesAgreesWithExtendedPrecision) {
  auto spec = henon_heiles("strang", 1e-2, 10.0);
  const auto out = sy::run_once(spec);
  const double metric = sy::local_energy_error_max(out.trajectory, out.energy);
  const sy::HenonHeiles p;
  auto energy_big = [&](std::span<const double> y) {
    const std::vector<Big> b(y.begin(), y.end());
    return p.hamiltonian<Big>(std::span<const Big>(b));
  };
  Big worst = 0;
  Big prev = energy_big(out.trajectory.state(0));
  for (std::size_t n = 1; n < out.trajectory.size(); ++n) {
    const Big now = energy_big(out.trajectory.state(n));
    worst = std::max(worst, Big(abs((now - prev) / prev)));
    prev = now;
  }
  EXPECT_LT(abs(Big(metric) - worst) / worst, Big("1e-6"));
  // Third-order local energy error: halving h divides it by ~8.
  spec.h = 2e-2;
  const auto coarse = sy::run_once(spec);
  const double ratio = sy::local_energy_error_max(coarse.trajectory, coarse.energy) / metric;
  EXPECT_NEAR(std::log2(ratio), 3.0, 0.2);
  EXPECT_GT(metric, 1e-10);
  EXPECT_LT(metric, 1e-5);
}

TEST(GlobalEnergyError, SeriesShape) {
  const auto s = sy::global_energy_error_series(trajectory_of(1, {{4.0}, {5.0}, {2.0}}), kFirst);
  EXPECT_EQ(s.value, (std::vector<double>{0.0, 0.25, 0.5}));
  EXPECT_EQ(s.t, (std::vector<double>{0.0, 1.0, 2.0}));
  EXPECT_EQ(s.max, 0.5);
  EXPECT_THROW(sy::global_energy_error_series(trajectory_of(1, {{0.0}, {5.0}}), kFirst), sy::MetricError);
}

TEST(ComponentErrors, IdentityAndHandComputedDrift) {
  const auto ref = trajectory_of(2, {{1.0, 2.0}, {1.0, 2.0}});
  const auto same = sy::component_error_series(ref, ref, {{"all", {0, 1}}});
  for (double v : same.values[0]) EXPECT_EQ(v, 0.0);
  // x(t) = t against x(t) = t + 0.5 t: relative error 1/3 once t > 0.
  const auto exact = trajectory_of(1, {{0.0}, {1.5}, {3.0}});
  const auto drift = trajectory_of(1, {{0.0}, {1.0}, {2.0}});
  const auto err = sy::component_error_series(drift, exact, {{"x", {0}}});
  EXPECT_EQ(err.values[0][0], 0.0);
  EXPECT_DOUBLE_EQ(err.values[0][1], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(err.values[0][2], 1.0 / 3.0);
  EXPECT_THROW(sy::component_error_series(trajectory_of(1, {{0.0}, {1.0}}), exact, {{"x", {0}}}), sy::InputError);
  EXPECT_THROW(sy::component_error_series(trajectory_of(1, {{0.0}, {1.0}, {2.0}}, 2.0), exact, {{"x", {0}}}),
               sy::InputError);
  EXPECT_THROW(sy::component_error_series(exact, exact, {{"y", {1}}}), sy::InputError);
}

// Rows every 20 time units in all three runs; Strang gets slightly fewer
// function evaluations than the implicit run.
TEST(ComponentErrors, SchwarzschildStrangRadiusTrailsImplicit) {
  sy::RunSpec s;
  s.problem = "schwarzschild";
  s.tf = 2000.0;
  s.repeat = 1;
  s.method = "irkgl16-simd";
  s.h = 0.5;
  s.save_every = 40;
  const auto reference = sy::run_once(s).natural();
  s.h = 2.0;
  s.save_every = 10;
  const auto implicit = sy::run_once(s);
  s.method = "strang";
  s.h = 0.125;
  s.save_every = 160;
  const auto strang = sy::run_once(s);
  ASSERT_EQ(implicit.trajectory.size(), reference.size());
  ASSERT_EQ(strang.trajectory.size(), reference.size());
  EXPECT_LE(strang.trajectory.rhs_evals, implicit.trajectory.rhs_evals);
  const auto groups = sy::default_groups("schwarzschild");
  const double ei = sy::component_error_series(implicit.natural(), reference, groups).values[0].back();
  const double ee = sy::component_error_series(strang.natural(), reference, groups).values[0].back();
  EXPECT_GE(ee, ei);
}

TEST(WorkPrecisionSweep, FourStepsThreeMethodsIsTwelveRows) {
  const std::vector<double> hs{0.2, 0.1, 0.05, 0.025};
  const std::vector<std::string> methods{"strang", "suz90", "irkgl16-simd"};
  const auto records = sy::work_precision_sweep(henon_heiles("strang", 0.2, 2.0), hs, methods);
  ASSERT_EQ(records.size(), 12u);
  for (std::size_t m = 0; m < methods.size(); ++m) {
    for (std::size_t k = 0; k < hs.size(); ++k) {
      const auto& r = records[m * hs.size() + k];
      EXPECT_EQ(r.method, methods[m]);
      EXPECT_EQ(r.h, hs[k]);
      EXPECT_TRUE(r.flags.empty());
      EXPECT_GT(r.rhs_evals, 0);
      EXPECT_GE(r.dh_loc_max, 0.0);
      EXPECT_EQ(r.steps, std::llround(2.0 / hs[k]));
      if (m < 2) {
        const auto plan = sy::SplittingPlan::from_scheme(sy::scheme_registry().get(methods[m]), 2);
        EXPECT_EQ(r.rhs_evals, r.steps * plan.evaluations());
        if (k > 0) {
          EXPECT_LT(r.dh_loc_max, records[m * hs.size() + k - 1].dh_loc_max) << methods[m];
        }
      } else {
        EXPECT_EQ(r.rhs_evals, 8 * r.total_iters);
        EXPECT_LT(r.dh_loc_max, 1e-14);
      }
    }
  }
}

TEST(WorkPrecisionSweep, FailuresAreFlaggedAndTheSweepContinues) {
  // Explicit steps of 3 on Henon-Heiles leave the potential well.
  const std::vector<double> hs{3.0, 0.5};
  auto spec = henon_heiles("strang", 3.0, 300.0);
  const auto records = sy::work_precision_sweep(spec, hs, {"strang"});
  ASSERT_EQ(records.size(), 2u);
  EXPECT_FALSE(records[0].flags.empty());
  EXPECT_TRUE(records[1].flags.empty());
  EXPECT_THROW(sy::work_precision_sweep(spec, hs, {"rk4"}), sy::ConfigurationError);
}

TEST(Runs, ZeroLengthIntervalGivesInitialRow) {
  const auto out = sy::run_once(henon_heiles("irkgl16-seq", 0.1, 0.0));
  ASSERT_EQ(out.trajectory.size(), 1u);
  const auto y0 = sy::initial_state("henon-heiles");
  EXPECT_EQ(std::vector<double>(out.trajectory.back().begin(), out.trajectory.back().end()), y0);
  EXPECT_EQ(out.trajectory.rhs_evals, 0);
}

TEST(Runs, SchwarzschildSplittingReportsPolarRows) {
  sy::RunSpec s;
  s.problem = "schwarzschild";
  s.method = "suz90";
  s.h = 0.5;
  s.tf = 5.0;
  s.repeat = 1;
  const auto out = sy::run_once(s);
  EXPECT_TRUE(out.cartesian);
  const auto nat = out.natural();
  const auto y0 = sy::initial_state("schwarzschild");
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(nat.state(0)[i], y0[i], 1e-14 * (1 + std::fabs(y0[i])));
  const auto natural_energy = sy::natural_energy("schwarzschild");
  for (std::size_t n = 0; n < nat.size(); ++n) {
    EXPECT_NEAR(natural_energy(nat.state(n)), out.energy(out.trajectory.state(n)), 1e-13);
  }
}

TEST(Runs, MethodListAndValidation) {
  const auto names = sy::method_names();
  const std::vector<std::string> expected{"irkgl16-simd", "irkgl16-seq", "strang", "suz90", "ss05-6",
                                          "ss05-8",       "ss05-10",     "bm02",   "bce22"};
  EXPECT_EQ(names, expected);
  EXPECT_EQ(sy::problem_names().size(), 3u);
  EXPECT_TRUE(sy::is_implicit("irkgl16-seq"));
  EXPECT_FALSE(sy::is_implicit("strang"));
  auto s = henon_heiles("strang", 0.1, 1.0);
  EXPECT_NO_THROW(s.validate());
  s.method = "leapfrog";
  EXPECT_THROW(s.validate(), sy::ConfigurationError);
  s = henon_heiles("strang", 0.0, 1.0);
  EXPECT_THROW(s.validate(), sy::InputError);
  s = henon_heiles("strang", 0.1, -1.0);
  EXPECT_THROW(s.validate(), sy::InputError);
  s = henon_heiles("strang", 0.1, 1.0);
  s.problem = "kepler";
  EXPECT_THROW(s.validate(), sy::ConfigurationError);
  s = henon_heiles("irkgl16-simd", 0.1, 1.0);
  s.mode = "newton";
  EXPECT_THROW(s.validate(), sy::ConfigurationError);
}

TEST(RunSpecJson, RoundTripAndPartialOverride) {
  sy::RunSpec s = henon_heiles("bm02", 0.125, 10.0);
  s.save_every = 7;
  s.out = "x.csv";
  s.mode = "first-order";
  const auto back = sy::run_spec_from_json(sy::run_spec_to_json(s));
  EXPECT_EQ(back.method, "bm02");
  EXPECT_EQ(back.h, 0.125);
  EXPECT_EQ(back.tf, 10.0);
  EXPECT_EQ(back.save_every, 7);
  EXPECT_EQ(back.out, "x.csv");
  EXPECT_EQ(back.mode, "first-order");
  const auto partial = sy::run_spec_from_json(R"({"h": 0.5})", s);
  EXPECT_EQ(partial.h, 0.5);
  EXPECT_EQ(partial.method, "bm02");
  EXPECT_THROW(sy::run_spec_from_json("{\"h\": \"big\"}"), sy::InputError);
  EXPECT_THROW(sy::run_spec_from_json("[1, 2]"), sy::InputError);
  EXPECT_THROW(sy::run_spec_from_json("{"), sy::InputError);
}

TEST(Csv, SweepRoundTripIsExact) {
  std::vector<sy::WorkPrecisionRecord> records(3);
  records[0] = {"strang", 0.1, 10, 10, 10, 1.25e-4, 1.0 / 3.0, 2.0 / 3.0, 0.0, {}};
  records[1] = {"irkgl16-simd", 2 * std::acos(-1.0) / 68, 68, 4352, 544, 3.5e-3, 5e-17, 1.1e-16, 0.0, {}};
  records[2] = {"bm02", 0.7, 0, 0, 0, 0.0, std::numeric_limits<double>::quiet_NaN(),
                std::numeric_limits<double>::quiet_NaN(), 0.0, {"diverged"}};
  std::stringstream ss;
  sy::write_sweep_csv(ss, records);
  std::string header;
  std::getline(ss, header);
  EXPECT_EQ(header, "method,h,steps,rhs_evals,total_iters,wall_seconds,dh_loc_max,dh_glob_max");
  ss.seekg(0);
  const auto back = sy::read_sweep_csv(ss);
  ASSERT_EQ(back.size(), records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(back[i].method, records[i].method);
    EXPECT_EQ(back[i].h, records[i].h);
    EXPECT_EQ(back[i].steps, records[i].steps);
    EXPECT_EQ(back[i].rhs_evals, records[i].rhs_evals);
    EXPECT_EQ(back[i].total_iters, records[i].total_iters);
    EXPECT_EQ(back[i].wall_seconds, records[i].wall_seconds);
    if (std::isnan(records[i].dh_loc_max)) {
      EXPECT_TRUE(std::isnan(back[i].dh_loc_max));
      EXPECT_TRUE(std::isnan(back[i].dh_glob_max));
    } else {
      EXPECT_EQ(back[i].dh_loc_max, records[i].dh_loc_max);
      EXPECT_EQ(back[i].dh_glob_max, records[i].dh_glob_max);
    }
  }
  std::istringstream bad_header("method,h\n");
  EXPECT_THROW(sy::read_sweep_csv(bad_header), sy::InputError);
  std::istringstream bad_row(header + "\nstrang,0.1,x,1,1,0,0,0\n");
  EXPECT_THROW(sy::read_sweep_csv(bad_row), sy::InputError);
}

TEST(Csv, DoubleFormattingRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-310, 0.0}) {
    EXPECT_EQ(sy::parse_double(sy::format_double(x)), x);
  }
  EXPECT_EQ(sy::format_double(0.5), "0.5");
  EXPECT_THROW(sy::parse_double("1.5e"), sy::InputError);
  EXPECT_THROW(sy::parse_double(""), sy::InputError);
}

TEST(Csv, TrajectoryColumns) {
  const auto traj = trajectory_of(2, {{1.0, 0.5}, {0.25, 2.0}}, 0.5);
  std::ostringstream os;
  sy::write_trajectory_csv(os, traj, {"q", "p"});
  EXPECT_EQ(os.str(), "t,q,p\n0,1,0.5\n0.5,0.25,2\n");
  EXPECT_EQ(sy::state_labels("outer-solar-system").size(), 36u);
  EXPECT_EQ(sy::state_labels("schwarzschild"), (std::vector<std::string>{"r", "theta", "p_r", "p_theta"}));
}

TEST(Timing, RepeatsReportTheFastestRun) {
  auto s = henon_heiles("strang", 0.01, 20.0);
  s.repeat = 3;
  const auto timed = sy::run_timed(s);
  EXPECT_GT(timed.trajectory.wall_seconds, 0.0);
  EXPECT_EQ(timed.trajectory.steps, 2000);
  const auto once = sy::run_once(s);
  EXPECT_EQ(timed.trajectory.states, once.trajectory.states);
}

TEST(Timing, CpuMatchLandsOrFlags) {
  auto target_spec = henon_heiles("irkgl16-simd", 2 * std::acos(-1.0) / 68, 200.0);
  target_spec.tf = 2 * std::acos(-1.0) / 68 * 2000;
  target_spec.repeat = 3;
  const double target = sy::run_timed(target_spec).trajectory.wall_seconds;
  auto s = target_spec;
  s.method = "ss05-8";
  const auto rec = sy::match_cpu_time(s, target, s.h);
  EXPECT_GT(rec.steps, 0);
  const bool landed = std::fabs(rec.wall_seconds / target - 1.0) <= 0.10;
  const bool flagged = !rec.flags.empty() && rec.flags.back() == "cpu_match_outside_tolerance";
  EXPECT_TRUE(landed != flagged) << rec.wall_seconds << " vs " << target;
  EXPECT_NEAR(rec.h * static_cast<double>(rec.steps), s.tf - s.t0, 1e-9 * s.tf);
  EXPECT_THROW(sy::match_cpu_time(s, 0.0, s.h), sy::InputError);
  s.tf = s.t0;
  EXPECT_THROW(sy::match_cpu_time(s, target, s.h), sy::InputError);
}

TEST(RunReport, JsonCarriesSpecAndCounters) {
  const auto s = henon_heiles("strang", 0.5, 1.0);
  const auto out = sy::run_once(s);
  const auto json = sy::run_report_json(s, out.trajectory);
  EXPECT_NE(json.find("\"method\""), std::string::npos);
  EXPECT_NE(json.find("\"total_rhs_evals\""), std::string::npos);
  EXPECT_NE(json.find("strang"), std::string::npos);
}
