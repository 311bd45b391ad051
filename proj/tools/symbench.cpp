// symbench: run, sweep and trace the integrators on the bundled problems.
// Exit codes: 0 ok, 2 bad problem/method/arguments, 3 numerical divergence,
// 4 I/O failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "symplectic/bench.hpp"
#include "symplectic/errors.hpp"
#include "symplectic/tableau.hpp"

namespace sy = symplectic;

namespace {

struct Options {
  sy::RunSpec spec;
  std::string config;
  std::vector<std::string> methods;
  std::vector<double> hs;
  int ref_factor = 4;
  int stages = 8;
  unsigned digits = 50;
};

void add_run_options(CLI::App* cmd, Options& o, bool multi) {
  cmd->add_option("--problem", o.spec.problem, "henon-heiles | outer-solar-system | schwarzschild");
  if (multi) {
    cmd->add_option("--method", o.methods, "methods, comma separated or repeated")->delimiter(',');
    cmd->add_option("--h", o.hs, "step sizes, comma separated or repeated")->delimiter(',');
  } else {
    cmd->add_option("--method", o.spec.method, "irkgl16-simd | irkgl16-seq | scheme name");
    cmd->add_option("--h", o.spec.h, "step size");
    cmd->add_option("--save-every", o.spec.save_every, "store every n-th step");
  }
  cmd->add_option("--t0", o.spec.t0, "start time");
  cmd->add_option("--tf", o.spec.tf, "end time");
  cmd->add_option("--out", o.spec.out, "output CSV (stdout when omitted)");
  cmd->add_option("--repeat", o.spec.repeat, "timed repeats after one warm-up");
  cmd->add_option("--max-iters", o.spec.max_iters, "fixed-point iteration cap");
  cmd->add_option("--mode", o.spec.mode, "auto | first-order | partitioned");
  cmd->add_option("--config", o.config, "JSON file with RunSpec fields; flags override it");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw sy::IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Config values first, then every flag given on the command line.
sy::RunSpec effective_spec(const CLI::App* cmd, const Options& o) {
  if (o.config.empty()) return o.spec;
  sy::RunSpec s = sy::run_spec_from_json(read_file(o.config), sy::RunSpec{});
  auto given = [cmd](const char* flag) { return cmd->count(flag) > 0; };
  if (given("--problem")) s.problem = o.spec.problem;
  if (given("--method") && o.methods.empty()) s.method = o.spec.method;
  if (given("--h") && o.hs.empty()) s.h = o.spec.h;
  if (given("--t0")) s.t0 = o.spec.t0;
  if (given("--tf")) s.tf = o.spec.tf;
  if (given("--save-every")) s.save_every = o.spec.save_every;
  if (given("--out")) s.out = o.spec.out;
  if (given("--repeat")) s.repeat = o.spec.repeat;
  if (given("--max-iters")) s.max_iters = o.spec.max_iters;
  if (given("--mode")) s.mode = o.spec.mode;
  return s;
}

template <class Writer>
void emit(const std::string& path, Writer&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream os(path);
  if (!os) throw sy::IoError("cannot open " + path + " for writing");
  write(os);
  os.close();
  if (!os) throw sy::IoError("failed writing " + path);
}

std::ostream& summary_stream(const sy::RunSpec& s) { return s.out.empty() ? std::cerr : std::cout; }

int cmd_list() {
  std::cout << "problems:";
  for (const auto& p : sy::problem_names()) std::cout << ' ' << p;
  std::cout << "\nmethods:";
  for (const auto& m : sy::method_names()) std::cout << ' ' << m;
  std::cout << '\n';
  return 0;
}

int cmd_run(const CLI::App* cmd, const Options& o) {
  const sy::RunSpec s = effective_spec(cmd, o);
  const sy::RunOutput out = s.repeat > 1 ? sy::run_timed(s) : sy::run_once(s);
  const sy::Trajectory nat = out.natural();
  emit(s.out, [&](std::ostream& os) { sy::write_trajectory_csv(os, nat, sy::state_labels(s.problem)); });
  if (!s.out.empty()) {
    const auto report = std::filesystem::path(s.out).replace_extension(".json");
    emit(report.string(), [&](std::ostream& os) { os << sy::run_report_json(s, out.trajectory) << '\n'; });
  }
  summary_stream(s) << s.method << " on " << s.problem << ": steps=" << out.trajectory.steps
                    << " rhs_evals=" << out.trajectory.rhs_evals << " iters=" << out.trajectory.total_iters
                    << " wall=" << sy::format_double(out.trajectory.wall_seconds) << "s\n";
  return 0;
}

int cmd_sweep(const CLI::App* cmd, const Options& o) {
  sy::RunSpec s = effective_spec(cmd, o);
  std::vector<std::string> methods = o.methods.empty() ? std::vector<std::string>{s.method} : o.methods;
  std::vector<double> hs = o.hs.empty() ? std::vector<double>{s.h} : o.hs;
  s.h = hs.front();
  s.method = methods.front();
  for (const auto& m : methods) {
    s.method = m;
    s.validate();
  }
  const auto records = sy::work_precision_sweep(s, hs, methods);
  emit(s.out, [&](std::ostream& os) { sy::write_sweep_csv(os, records); });
  std::size_t failed = 0;
  for (const auto& r : records) failed += r.flags.empty() ? 0 : 1;
  summary_stream(s) << "sweep on " << s.problem << ": " << records.size() << " runs, " << failed << " flagged\n";
  return 0;
}

int cmd_trace(const CLI::App* cmd, const Options& o) {
  const sy::RunSpec s = effective_spec(cmd, o);
  if (o.ref_factor < 1) throw sy::InputError("--ref-factor must be at least 1");
  const sy::RunOutput out = sy::run_once(s);
  const sy::Trajectory nat = out.natural();
  const sy::Series energy = sy::global_energy_error_series(out.trajectory, out.energy);

  sy::RunSpec ref = s;
  ref.method = "irkgl16-simd";
  ref.h = s.h / o.ref_factor;
  ref.save_every = s.save_every * o.ref_factor;
  const sy::Trajectory reference = sy::run_once(ref).natural();
  const auto errors = sy::component_error_series(nat, reference, sy::default_groups(s.problem));

  std::vector<std::string> names{"dh_glob"};
  std::vector<std::vector<double>> columns{energy.value};
  for (std::size_t g = 0; g < errors.names.size(); ++g) {
    names.push_back("err_" + errors.names[g]);
    columns.push_back(errors.values[g]);
  }
  emit(s.out, [&](std::ostream& os) { sy::write_series_csv(os, nat.t, names, columns); });
  summary_stream(s) << "trace " << s.method << " on " << s.problem << ": rows=" << nat.size()
                    << " dh_glob_max=" << sy::format_double(energy.max) << '\n';
  return 0;
}

int cmd_tableau(const Options& o) {
  const sy::ScalarTableau t = sy::build_scalar_tableau(o.stages, o.digits);
  emit(o.spec.out, [&](std::ostream& os) { sy::write_coefficients(os, t); });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symplectic integrator benchmarks"};
  app.set_help_flag("--help", "print this help");
  app.require_subcommand(1);
  Options o;

  app.add_subcommand("list", "list problems and methods");
  auto* run = app.add_subcommand("run", "integrate once and write the trajectory");
  add_run_options(run, o, false);
  auto* sweep = app.add_subcommand("sweep", "work-precision sweep over methods and step sizes");
  add_run_options(sweep, o, true);
  auto* trace = app.add_subcommand("trace", "error evolution against a refined IRKGL16 reference");
  add_run_options(trace, o, false);
  trace->add_option("--ref-factor", o.ref_factor, "reference step is h / factor");
  auto* tab = app.add_subcommand("tableau", "write Gauss-Legendre coefficients");
  tab->add_option("--stages", o.stages, "number of stages");
  tab->add_option("--digits", o.digits, "working digits of the construction");
  tab->add_option("--out", o.spec.out, "output file (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand("list")) return cmd_list();
    if (app.got_subcommand(run)) return cmd_run(run, o);
    if (app.got_subcommand(sweep)) return cmd_sweep(sweep, o);
    if (app.got_subcommand(trace)) return cmd_trace(trace, o);
    if (app.got_subcommand(tab)) return cmd_tableau(o);
  } catch (const sy::DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const sy::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
