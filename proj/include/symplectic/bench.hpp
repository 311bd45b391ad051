#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "symplectic/trajectory.hpp"

namespace symplectic {

using EnergyFunction = std::function<double(std::span<const double>)>;

// max_n |(H(y_n) - H(y_{n-1})) / H(y_{n-1})| over consecutive stored rows.
double local_energy_error_max(const Trajectory& traj, const EnergyFunction& energy);

struct Series {
  std::vector<double> t;
  std::vector<double> value;
  double max = 0.0;
};

// |(H(y_n) - H(y_0)) / H(y_0)| per stored row.
Series global_energy_error_series(const Trajectory& traj, const EnergyFunction& energy);

// Each group is a set of state indices measured together:
// ||x_g - ref_g||_2 / ||ref_g||_2.
struct ComponentGroup {
  std::string name;
  std::vector<std::size_t> indices;
};

struct ComponentSeries {
  std::vector<double> t;
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;  // values[g][n]
};

// Requires equal row counts and save times agreeing to 1e-9 relative.
ComponentSeries component_error_series(const Trajectory& traj, const Trajectory& reference,
                                       const std::vector<ComponentGroup>& groups);

// ---------------------------------------------------------------------------
// Runs by name.

const std::vector<std::string>& problem_names();
const std::vector<std::string>& implicit_method_names();
// Implicit methods followed by the registry schemes.
std::vector<std::string> method_names();
bool is_implicit(const std::string& method);

struct RunSpec {
  std::string problem = "henon-heiles";
  std::string method = "irkgl16-simd";
  double h = 0.0;
  double t0 = 0.0;
  double tf = 0.0;
  std::int64_t save_every = 1;
  std::string out;
  int repeat = 3;
  int max_iters = 100;
  std::string mode = "auto";  // auto | first-order | partitioned

  // Throws ConfigurationError on unknown names, InputError on bad numbers.
  void validate() const;
};

// Reads RunSpec fields from a JSON object; absent fields keep `base` values.
RunSpec run_spec_from_json(const std::string& text, RunSpec base = {});
std::string run_spec_to_json(const RunSpec& spec);

// A finished run in the integrator's own variables. Schwarzschild splitting
// runs integrate (x, y, p_x, p_y); natural() converts rows to (r, theta, p_r, p_theta).
struct RunOutput {
  Trajectory trajectory;
  EnergyFunction energy;
  bool cartesian = false;

  Trajectory natural() const;
};

std::vector<double> initial_state(const std::string& problem);
std::vector<std::string> state_labels(const std::string& problem);
EnergyFunction natural_energy(const std::string& problem);
// Error groups used by trace: (q, p) for Henon-Heiles, per-body positions
// for the solar system, the radius for Schwarzschild.
std::vector<ComponentGroup> default_groups(const std::string& problem);

// One integration, no repeats.
RunOutput run_once(const RunSpec& spec);
// One warm-up, then `repeat` timed runs; the returned trajectory is the
// last one with wall_seconds set to the minimum.
RunOutput run_timed(const RunSpec& spec);

struct WorkPrecisionRecord {
  std::string method;
  double h = 0.0;
  std::int64_t steps = 0;
  std::int64_t rhs_evals = 0;
  std::int64_t total_iters = 0;
  double wall_seconds = 0.0;
  double dh_loc_max = std::numeric_limits<double>::quiet_NaN();
  double dh_glob_max = std::numeric_limits<double>::quiet_NaN();
  double final_error = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> flags;
};

// Metrics of a finished run; final_error against `reference` when given.
WorkPrecisionRecord make_record(const std::string& method, double h, const RunOutput& out,
                                const Trajectory* reference = nullptr);

// One record per (method, h), methods outer. save_every is forced to 1.
// Failures become flags ("diverged", "error: ...") and the sweep continues.
std::vector<WorkPrecisionRecord> work_precision_sweep(const RunSpec& tmpl, std::span<const double> hs,
                                                      const std::vector<std::string>& methods);

// Largest h = (tf - t0)/N whose timed run lands within `tolerance` of
// target_seconds; starts from h0 and rescales by the cost ratio. Flags
// "cpu_match_outside_tolerance" when no attempt lands inside.
WorkPrecisionRecord match_cpu_time(const RunSpec& tmpl, double target_seconds, double h0,
                                   double tolerance = 0.10, int attempts = 8);

// Shortest round-trip decimal.
std::string format_double(double x);
double parse_double(const std::string& s);

void write_sweep_csv(std::ostream& os, const std::vector<WorkPrecisionRecord>& records);
std::vector<WorkPrecisionRecord> read_sweep_csv(std::istream& is);
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const std::vector<std::string>& labels);
void write_series_csv(std::ostream& os, const std::vector<double>& t, const std::vector<std::string>& names,
                      const std::vector<std::vector<double>>& columns);
std::string run_report_json(const RunSpec& spec, const Trajectory& traj);

}  // namespace symplectic
