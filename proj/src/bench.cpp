#include "symplectic/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <type_traits>
#include <variant>

#include "json.hpp"
#include "symplectic/irkgl.hpp"
#include "symplectic/problems.hpp"
#include "symplectic/splitting.hpp"
#include "symplectic/tableau.hpp"

namespace symplectic {

namespace {

double relative_energy_change(double now, double base) {
  if (base == 0.0) throw MetricError("energy error: zero reference energy");
  return std::fabs((now - base) / base);
}

const GaussTableau<8>& gauss16() {
  static const GaussTableau<8> tab = build_tableau<8>();
  return tab;
}

using AnyProblem = std::variant<HenonHeiles, NBody, Schwarzschild>;

AnyProblem make_problem(const std::string& name) {
  if (name == "henon-heiles") return HenonHeiles();
  if (name == "outer-solar-system") return outer_solar_system();
  if (name == "schwarzschild") return Schwarzschild();
  throw ConfigurationError("unknown problem " + name);
}

template <class P>
IterationMode resolve_mode(const std::string& mode, const P& problem) {
  if (mode == "first-order") return IterationMode::first_order;
  if (mode == "partitioned") return IterationMode::partitioned;
  return problem.second_order_dimension() > 0 ? IterationMode::partitioned : IterationMode::first_order;
}

template <class F>
RunOutput run_splitting(F flows, const SplittingScheme& scheme, const StepGrid& grid, std::span<const double> y0,
                        std::size_t dim) {
  SplittingIntegrator<F> method(std::move(flows), SplittingPlan::from_scheme(scheme, F::size()), dim);
  RunOutput out;
  out.trajectory = integrate(method, grid, y0, method.rhs_evals_per_sweep());
  return out;
}

template <class P>
RunOutput run_problem(const P& problem, const RunSpec& spec, const StepGrid& grid) {
  const std::vector<double> y0 = problem.initial_state();
  RunOutput out;
  if (spec.method == "irkgl16-simd") {
    LaneIrkgl<8, P> m(problem, gauss16(), resolve_mode(spec.mode, problem), spec.max_iters);
    out.trajectory = integrate(m, grid, y0, m.rhs_evals_per_sweep());
  } else if (spec.method == "irkgl16-seq") {
    SequentialIrkgl<P> m(problem, gauss16().scalar, resolve_mode(spec.mode, problem), spec.max_iters);
    out.trajectory = integrate(m, grid, y0, m.rhs_evals_per_sweep());
  } else {
    const SplittingScheme& scheme = scheme_registry().get(spec.method);
    if constexpr (std::is_same_v<P, Schwarzschild>) {
      const auto z0 = polar_to_cart(y0);
      out = run_splitting(schwarzschild_flowset(problem), scheme, grid, z0, 4);
      out.cartesian = true;
      out.energy = [problem](std::span<const double> z) { return problem.cartesian_energy(z); };
      return out;
    } else {
      out = run_splitting(DriftKickFlows<P>(problem), scheme, grid, y0, problem.dimension());
    }
  }
  out.energy = [problem](std::span<const double> y) { return problem.template hamiltonian<double>(y); };
  return out;
}

void require_method(const std::string& method) {
  if (is_implicit(method)) return;
  if (!scheme_registry().contains(method)) throw ConfigurationError("unknown method " + method);
}

}  // namespace

double local_energy_error_max(const Trajectory& traj, const EnergyFunction& energy) {
  double worst = 0.0;
  if (traj.size() < 2) return worst;
  double prev = energy(traj.state(0));
  for (std::size_t n = 1; n < traj.size(); ++n) {
    const double now = energy(traj.state(n));
    if (prev == 0.0) throw MetricError("local energy error: zero energy at row " + std::to_string(n - 1));
    worst = std::max(worst, std::fabs((now - prev) / prev));
    prev = now;
  }
  return worst;
}

Series global_energy_error_series(const Trajectory& traj, const EnergyFunction& energy) {
  Series s;
  if (traj.size() == 0) return s;
  const double h0 = energy(traj.state(0));
  s.t = traj.t;
  s.value.reserve(traj.size());
  for (std::size_t n = 0; n < traj.size(); ++n) {
    const double e = relative_energy_change(energy(traj.state(n)), h0);
    s.value.push_back(e);
    s.max = std::max(s.max, e);
  }
  return s;
}

ComponentSeries component_error_series(const Trajectory& traj, const Trajectory& reference,
                                       const std::vector<ComponentGroup>& groups) {
  if (traj.size() != reference.size()) throw InputError("component errors: trajectories have different row counts");
  if (traj.dim != reference.dim) throw InputError("component errors: state dimensions differ");
  for (std::size_t n = 0; n < traj.size(); ++n) {
    const double scale = std::max({1.0, std::fabs(traj.t[n]), std::fabs(reference.t[n])});
    if (std::fabs(traj.t[n] - reference.t[n]) > 1e-9 * scale) {
      throw InputError("component errors: save times differ at row " + std::to_string(n));
    }
  }
  ComponentSeries out;
  out.t = traj.t;
  for (const auto& g : groups) {
    for (std::size_t i : g.indices)
      if (i >= traj.dim) throw InputError("component errors: index out of range in group " + g.name);
    out.names.push_back(g.name);
    std::vector<double> v(traj.size());
    for (std::size_t n = 0; n < traj.size(); ++n) {
      const auto a = traj.state(n);
      const auto b = reference.state(n);
      double num = 0.0, den = 0.0;
      for (std::size_t i : g.indices) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
      }
      v[n] = den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
    }
    out.values.push_back(std::move(v));
  }
  return out;
}

const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names{"henon-heiles", "outer-solar-system", "schwarzschild"};
  return names;
}

const std::vector<std::string>& implicit_method_names() {
  static const std::vector<std::string> names{"irkgl16-simd", "irkgl16-seq"};
  return names;
}

std::vector<std::string> method_names() {
  std::vector<std::string> out = implicit_method_names();
  for (const auto& n : scheme_registry().names()) out.push_back(n);
  return out;
}

bool is_implicit(const std::string& method) {
  const auto& names = implicit_method_names();
  return std::find(names.begin(), names.end(), method) != names.end();
}

void RunSpec::validate() const {
  const auto& probs = problem_names();
  if (std::find(probs.begin(), probs.end(), problem) == probs.end()) {
    throw ConfigurationError("unknown problem " + problem);
  }
  require_method(method);
  if (mode != "auto" && mode != "first-order" && mode != "partitioned") {
    throw ConfigurationError("unknown iteration mode " + mode);
  }
  if (!(h > 0.0) || !std::isfinite(h)) throw InputError("h must be positive");
  if (!(tf >= t0)) throw InputError("tf must not precede t0");
  if (save_every < 1) throw InputError("save_every must be at least 1");
  if (repeat < 1) throw InputError("repeat must be at least 1");
  if (max_iters < 3) throw InputError("max_iters must be at least 3");
}

RunSpec run_spec_from_json(const std::string& text, RunSpec base) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw InputError("config: expected a JSON object");
  try {
    base.problem = j.value("problem", base.problem);
    base.method = j.value("method", base.method);
    base.h = j.value("h", base.h);
    base.t0 = j.value("t0", base.t0);
    base.tf = j.value("tf", base.tf);
    base.save_every = j.value("save_every", base.save_every);
    base.out = j.value("out", base.out);
    base.repeat = j.value("repeat", base.repeat);
    base.max_iters = j.value("max_iters", base.max_iters);
    base.mode = j.value("mode", base.mode);
  } catch (const nlohmann::json::type_error& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  return base;
}

std::string run_spec_to_json(const RunSpec& s) {
  nlohmann::json j{{"problem", s.problem}, {"method", s.method},         {"h", s.h},
                   {"t0", s.t0},           {"tf", s.tf},                 {"save_every", s.save_every},
                   {"out", s.out},         {"repeat", s.repeat},         {"max_iters", s.max_iters},
                   {"mode", s.mode}};
  return j.dump(2);
}

Trajectory RunOutput::natural() const {
  if (!cartesian) return trajectory;
  Trajectory t = trajectory;
  for (std::size_t n = 0; n < t.size(); ++n) {
    const auto p = cart_to_polar(trajectory.state(n));
    std::copy(p.begin(), p.end(), t.states.begin() + static_cast<std::ptrdiff_t>(n * t.dim));
  }
  return t;
}

std::vector<double> initial_state(const std::string& problem) {
  return std::visit([](const auto& p) { return p.initial_state(); }, make_problem(problem));
}

std::vector<std::string> state_labels(const std::string& problem) {
  if (problem == "henon-heiles") return {"q1", "q2", "p1", "p2"};
  if (problem == "schwarzschild") return {"r", "theta", "p_r", "p_theta"};
  if (problem == "outer-solar-system") {
    const NBody sys = outer_solar_system();
    std::vector<std::string> out;
    for (const char* kind : {"", "v"})
      for (const auto& b : sys.body_data())
        for (const char* axis : {"x", "y", "z"}) out.push_back(b.name + "." + kind + axis);
    return out;
  }
  throw ConfigurationError("unknown problem " + problem);
}

EnergyFunction natural_energy(const std::string& problem) {
  return std::visit(
      [](const auto& p) -> EnergyFunction {
        return [p](std::span<const double> y) { return p.template hamiltonian<double>(y); };
      },
      make_problem(problem));
}

std::vector<ComponentGroup> default_groups(const std::string& problem) {
  if (problem == "henon-heiles") return {{"q", {0, 1}}, {"p", {2, 3}}};
  if (problem == "schwarzschild") return {{"r", {0}}};
  if (problem == "outer-solar-system") {
    const NBody sys = outer_solar_system();
    std::vector<ComponentGroup> out;
    for (std::size_t i = 0; i < sys.bodies(); ++i) {
      out.push_back({sys.body_data()[i].name, {3 * i, 3 * i + 1, 3 * i + 2}});
    }
    return out;
  }
  throw ConfigurationError("unknown problem " + problem);
}

RunOutput run_once(const RunSpec& spec) {
  spec.validate();
  const StepGrid grid = StepGrid::make(spec.t0, spec.tf, spec.h, spec.save_every);
  return std::visit([&](const auto& p) { return run_problem(p, spec, grid); }, make_problem(spec.problem));
}

RunOutput run_timed(const RunSpec& spec) {
  run_once(spec);
  RunOutput best;
  double fastest = std::numeric_limits<double>::infinity();
  for (int r = 0; r < spec.repeat; ++r) {
    RunOutput out = run_once(spec);
    fastest = std::min(fastest, out.trajectory.wall_seconds);
    best = std::move(out);
  }
  best.trajectory.wall_seconds = fastest;
  return best;
}

WorkPrecisionRecord make_record(const std::string& method, double h, const RunOutput& out,
                                const Trajectory* reference) {
  WorkPrecisionRecord rec;
  const Trajectory& tr = out.trajectory;
  rec.method = method;
  rec.h = h;
  rec.steps = tr.steps;
  rec.rhs_evals = tr.rhs_evals;
  rec.total_iters = tr.total_iters;
  rec.wall_seconds = tr.wall_seconds;
  rec.flags = tr.flags;
  rec.dh_loc_max = local_energy_error_max(tr, out.energy);
  rec.dh_glob_max = global_energy_error_series(tr, out.energy).max;
  if (reference != nullptr && reference->size() > 0 && tr.size() > 0) {
    const Trajectory nat = out.natural();
    if (nat.dim != reference->dim) throw InputError("final error: reference dimension differs");
    const auto a = nat.back();
    const auto b = reference->back();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      num += (a[i] - b[i]) * (a[i] - b[i]);
      den += b[i] * b[i];
    }
    rec.final_error = den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
  }
  return rec;
}

std::vector<WorkPrecisionRecord> work_precision_sweep(const RunSpec& tmpl, std::span<const double> hs,
                                                      const std::vector<std::string>& methods) {
  std::vector<WorkPrecisionRecord> records;
  for (const auto& method : methods) {
    require_method(method);
    for (double h : hs) {
      RunSpec spec = tmpl;
      spec.method = method;
      spec.h = h;
      spec.save_every = 1;
      try {
        records.push_back(make_record(method, h, run_timed(spec)));
      } catch (const DivergenceError& e) {
        WorkPrecisionRecord rec;
        rec.method = method;
        rec.h = h;
        rec.flags = {"diverged", std::string("error: ") + e.what()};
        records.push_back(rec);
      } catch (const std::exception& e) {
        WorkPrecisionRecord rec;
        rec.method = method;
        rec.h = h;
        rec.flags = {std::string("error: ") + e.what()};
        records.push_back(rec);
      }
    }
  }
  return records;
}

WorkPrecisionRecord match_cpu_time(const RunSpec& tmpl, double target_seconds, double h0, double tolerance,
                                   int attempts) {
  if (!(target_seconds > 0.0)) throw InputError("cpu matching: target time must be positive");
  const double span = tmpl.tf - tmpl.t0;
  if (!(span > 0.0)) throw InputError("cpu matching: empty interval");
  auto steps_for = [&](double h) { return std::max<std::int64_t>(1, std::llround(span / h)); };
  std::int64_t n = steps_for(h0);
  WorkPrecisionRecord best;
  double best_miss = std::numeric_limits<double>::infinity();
  std::vector<std::int64_t> tried;
  for (int a = 0; a < attempts; ++a) {
    if (std::find(tried.begin(), tried.end(), n) != tried.end()) break;
    tried.push_back(n);
    RunSpec spec = tmpl;
    spec.h = span / static_cast<double>(n);
    spec.save_every = 1;
    const WorkPrecisionRecord rec = make_record(spec.method, spec.h, run_timed(spec));
    const double miss = std::fabs(rec.wall_seconds / target_seconds - 1.0);
    if (miss < best_miss) {
      best_miss = miss;
      best = rec;
    }
    if (miss <= tolerance) return rec;
    const double scaled = static_cast<double>(n) * target_seconds / std::max(rec.wall_seconds, 1e-9);
    n = std::max<std::int64_t>(1, std::llround(scaled));
  }
  best.flags.push_back("cpu_match_outside_tolerance");
  return best;
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) throw InputError("not a number: '" + s + "'");
  return v;
}

namespace {
const char* const kSweepHeader = "method,h,steps,rhs_evals,total_iters,wall_seconds,dh_loc_max,dh_glob_max";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::int64_t parse_int(const std::string& s) {
  std::int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw InputError("not an integer: '" + s + "'");
  return v;
}
}  // namespace

void write_sweep_csv(std::ostream& os, const std::vector<WorkPrecisionRecord>& records) {
  os << kSweepHeader << '\n';
  for (const auto& r : records) {
    os << r.method << ',' << format_double(r.h) << ',' << r.steps << ',' << r.rhs_evals << ',' << r.total_iters
       << ',' << format_double(r.wall_seconds) << ',' << format_double(r.dh_loc_max) << ','
       << format_double(r.dh_glob_max) << '\n';
  }
  if (!os) throw IoError("failed writing sweep CSV");
}

std::vector<WorkPrecisionRecord> read_sweep_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kSweepHeader) throw InputError("sweep CSV: unexpected header");
  std::vector<WorkPrecisionRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 8) throw InputError("sweep CSV: expected 8 columns in '" + line + "'");
    WorkPrecisionRecord r;
    r.method = cells[0];
    r.h = parse_double(cells[1]);
    r.steps = parse_int(cells[2]);
    r.rhs_evals = parse_int(cells[3]);
    r.total_iters = parse_int(cells[4]);
    r.wall_seconds = parse_double(cells[5]);
    r.dh_loc_max = parse_double(cells[6]);
    r.dh_glob_max = parse_double(cells[7]);
    out.push_back(std::move(r));
  }
  return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const std::vector<std::string>& labels) {
  if (labels.size() != traj.dim) throw InputError("trajectory CSV: label count differs from dimension");
  os << 't';
  for (const auto& l : labels) os << ',' << l;
  os << '\n';
  for (std::size_t n = 0; n < traj.size(); ++n) {
    os << format_double(traj.t[n]);
    for (double v : traj.state(n)) os << ',' << format_double(v);
    os << '\n';
  }
  if (!os) throw IoError("failed writing trajectory CSV");
}

void write_series_csv(std::ostream& os, const std::vector<double>& t, const std::vector<std::string>& names,
                      const std::vector<std::vector<double>>& columns) {
  if (names.size() != columns.size()) throw InputError("series CSV: name count differs from column count");
  for (const auto& c : columns)
    if (c.size() != t.size()) throw InputError("series CSV: column length differs from time grid");
  os << 't';
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  for (std::size_t i = 0; i < t.size(); ++i) {
    os << format_double(t[i]);
    for (const auto& c : columns) os << ',' << format_double(c[i]);
    os << '\n';
  }
  if (!os) throw IoError("failed writing series CSV");
}

std::string run_report_json(const RunSpec& spec, const Trajectory& traj) {
  nlohmann::json j{{"method", spec.method},
                   {"problem", spec.problem},
                   {"h", spec.h},
                   {"steps", traj.steps},
                   {"total_rhs_evals", traj.rhs_evals},
                   {"total_iters", traj.total_iters},
                   {"wall_seconds", traj.wall_seconds},
                   {"flags", traj.flags}};
  return j.dump(2);
}

}  // namespace symplectic
